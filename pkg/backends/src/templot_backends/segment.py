"""Segmentation adapter: emit one proposal manifest per image.

Engines: sam21 (point-grid prompting through the automatic mask generator),
sam3 (concept prompting), builtin (classical color-region components, no
model weights). All write the same manifest schema; thresholds filter
monotonically in every engine.
"""

from __future__ import annotations

import os

import numpy as np

from templot_backends import _cli, builtin, formats

DEFAULT_PARAMS = {
    "points_long_side": 64,
    "predicted_iou_threshold": 0.5,
    "stability_threshold": 0.7,
    "concept_confidence_threshold": 0.3,
}


def point_grid(width: int, height: int, points_long_side: int) -> list[tuple[float, float]]:
    long_side = max(width, height)
    short_side = min(width, height)
    short_count = max(1, int(round(points_long_side / (long_side / short_side))))
    nx, ny = (points_long_side, short_count) if width >= height else (short_count, points_long_side)
    xs = [(i + 0.5) * width / nx for i in range(nx)]
    ys = [(j + 0.5) * height / ny for j in range(ny)]
    return [(x, y) for y in ys for x in xs]


def _segment_sam21(rgb: np.ndarray, params: dict) -> list[tuple[np.ndarray, float]]:
    try:
        import torch  # noqa: F401
        from sam2.automatic_mask_generator import SAM2AutomaticMaskGenerator
        from sam2.build_sam import build_sam2
    except ImportError as exc:
        raise _cli.missing_runtime("sam21", "sam2 (+torch)") from exc
    checkpoint = params.get("checkpoint")
    model_cfg = params.get("model_cfg", "configs/sam2.1/sam2.1_hiera_l.yaml")
    if not checkpoint:
        raise _cli.AdapterError("sam21 engine needs params.checkpoint")
    generator = SAM2AutomaticMaskGenerator(
        build_sam2(model_cfg, checkpoint),
        points_per_side=None,
        point_grids=[np.array(point_grid(rgb.shape[1], rgb.shape[0], params["points_long_side"]))],
        pred_iou_thresh=params["predicted_iou_threshold"],
        stability_score_thresh=params["stability_threshold"],
    )
    return [
        (record["segmentation"].astype(bool), float(record["predicted_iou"]))
        for record in generator.generate(rgb)
    ]


def _segment_sam3(rgb: np.ndarray, params: dict) -> list[tuple[np.ndarray, float]]:
    try:
        import torch  # noqa: F401
        import sam3  # noqa: F401
    except ImportError as exc:
        raise _cli.missing_runtime("sam3", "sam3 (+torch)") from exc
    raise _cli.AdapterError(
        "sam3 engine wiring requires a released concept-prompt API; "
        "run with --engine builtin or sam21"
    )


def _segment_builtin(rgb: np.ndarray, params: dict) -> list[tuple[np.ndarray, float]]:
    return builtin.segment_regions(
        rgb,
        predicted_iou_threshold=params["predicted_iou_threshold"],
        stability_threshold=params["stability_threshold"],
    )


ENGINES = {"builtin": _segment_builtin, "sam21": _segment_sam21, "sam3": _segment_sam3}


def run(args) -> int:
    params = dict(DEFAULT_PARAMS)
    params.update(_cli.load_params(args.params))
    engine = ENGINES.get(args.engine)
    if engine is None:
        raise _cli.AdapterError(f"unknown engine {args.engine!r}; choose from {sorted(ENGINES)}")
    os.makedirs(args.out, exist_ok=True)
    written = []
    for name in _cli.list_pngs(args.images):
        image_id = os.path.splitext(name)[0]
        rgb = _cli.load_rgb(os.path.join(args.images, name))
        results = engine(rgb, params)
        manifest_path = os.path.join(args.out, f"{image_id}.json")
        formats.write_manifest(
            manifest_path,
            image_id=image_id,
            image_path=os.path.relpath(os.path.join(args.images, name), args.out),
            masks=[m for m, _ in results],
            confidences=[c for _, c in results],
            segmenter={
                "points_long_side": params["points_long_side"],
                "predicted_iou_threshold": params["predicted_iou_threshold"],
                "stability_threshold": params["stability_threshold"],
                "concept_confidence_threshold": params["concept_confidence_threshold"],
            },
        )
        written.append(manifest_path)
    print("\n".join(written))
    return 0


def main(argv=None) -> int:
    parser = _cli.base_parser(__doc__)
    parser.add_argument("--engine", default="builtin", choices=sorted(ENGINES))
    return _cli.run(run, parser.parse_args(argv))


if __name__ == "__main__":
    raise SystemExit(main())
