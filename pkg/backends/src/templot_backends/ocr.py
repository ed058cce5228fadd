"""OCR adapter: per-image text bounding boxes as templot OCR JSON.

Engines: tesseract (pytesseract word boxes), builtin (bright
low-saturation ink components; enough to localize rendered map labels).
"""

from __future__ import annotations

import os

from templot_backends import _cli, builtin, formats


def _ocr_tesseract(rgb, params):
    try:
        import pytesseract
        from PIL import Image
    except ImportError as exc:
        raise _cli.missing_runtime("tesseract", "pytesseract") from exc
    data = pytesseract.image_to_data(
        Image.fromarray(rgb), output_type=pytesseract.Output.DICT
    )
    boxes = []
    for left, top, width, height, conf, text in zip(
        data["left"], data["top"], data["width"], data["height"], data["conf"], data["text"]
    ):
        if not str(text).strip() or float(conf) < 0:
            continue
        boxes.append((left, top, left + width, top + height, float(conf) / 100.0))
    return boxes


def _ocr_builtin(rgb, params):
    return builtin.find_text_boxes(rgb)


ENGINES = {"builtin": _ocr_builtin, "tesseract": _ocr_tesseract}


def run(args) -> int:
    params = _cli.load_params(args.params)
    engine = ENGINES.get(args.engine)
    if engine is None:
        raise _cli.AdapterError(f"unknown engine {args.engine!r}; choose from {sorted(ENGINES)}")
    os.makedirs(args.out, exist_ok=True)
    written = []
    for name in _cli.list_pngs(args.images):
        image_id = os.path.splitext(name)[0]
        rgb = _cli.load_rgb(os.path.join(args.images, name))
        boxes = engine(rgb, params)
        out_path = os.path.join(args.out, f"{image_id}.json")
        formats.write_ocr(out_path, boxes)
        written.append(out_path)
    print("\n".join(written))
    return 0


def main(argv=None) -> int:
    parser = _cli.base_parser(__doc__)
    parser.add_argument("--engine", default="builtin", choices=sorted(ENGINES))
    return _cli.run(run, parser.parse_args(argv))


if __name__ == "__main__":
    raise SystemExit(main())
