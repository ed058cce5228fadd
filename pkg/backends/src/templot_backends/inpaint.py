"""Inpainting adapter: fill text-mask regions and write PNGs.

Engines: inpaint-anything (LaMa-based model), builtin (iterative
neighbor-average fill). Masks arrive as templot textmask JSON
({width, height, runs}) named <image_id>.json.
"""

from __future__ import annotations

import json
import os

import numpy as np

from templot_backends import _cli, builtin


def read_mask(path: str) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        width = int(doc["width"])
        height = int(doc["height"])
        runs = [int(r) for r in doc["runs"]]
    except (OSError, KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise _cli.AdapterError(f"bad mask file {path}: {exc}") from exc
    if sum(runs) != width * height:
        raise _cli.AdapterError(f"{path}: runs cover {sum(runs)} pixels, expected {width * height}")
    values = np.zeros(len(runs), dtype=np.uint8)
    values[1::2] = 1
    return np.repeat(values, runs).reshape(height, width).astype(bool)


def _inpaint_model(rgb, mask, params):
    try:
        import torch  # noqa: F401
    except ImportError as exc:
        raise _cli.missing_runtime("inpaint-anything", "torch (+lama weights)") from exc
    raise _cli.AdapterError(
        "inpaint-anything engine needs params.checkpoint pointing at LaMa "
        "weights; run with --engine builtin for a model-free fill"
    )


def _inpaint_builtin(rgb, mask, params):
    return builtin.inpaint(rgb, mask)


ENGINES = {"builtin": _inpaint_builtin, "inpaint-anything": _inpaint_model}


def run(args) -> int:
    params = _cli.load_params(args.params)
    engine = ENGINES.get(args.engine)
    if engine is None:
        raise _cli.AdapterError(f"unknown engine {args.engine!r}; choose from {sorted(ENGINES)}")
    os.makedirs(args.out, exist_ok=True)
    written = []
    for name in _cli.list_pngs(args.images):
        image_id = os.path.splitext(name)[0]
        mask_path = os.path.join(args.masks, f"{image_id}.json")
        if not os.path.isfile(mask_path):
            raise _cli.AdapterError(f"mask not found for {image_id}: {mask_path}")
        rgb = _cli.load_rgb(os.path.join(args.images, name))
        mask = read_mask(mask_path)
        if mask.shape != rgb.shape[:2]:
            raise _cli.AdapterError(
                f"{mask_path}: mask {mask.shape} does not match image {rgb.shape[:2]}"
            )
        filled = engine(rgb, mask, params)
        out_path = os.path.join(args.out, f"{image_id}.png")
        _cli.save_png(out_path, filled)
        written.append(out_path)
    print("\n".join(written))
    return 0


def main(argv=None) -> int:
    parser = _cli.base_parser(__doc__)
    parser.add_argument("--masks", required=True, help="textmask JSON directory")
    parser.add_argument("--engine", default="builtin", choices=sorted(ENGINES))
    return _cli.run(run, parser.parse_args(argv))


if __name__ == "__main__":
    raise SystemExit(main())
