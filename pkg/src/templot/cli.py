"""templot command line: synth | detect | remove-text | calibrate | evaluate | bench | validate.

Exit codes: 0 success, 2 configuration errors, 3 data errors, 4 internal
invariant violations. Errors are emitted as one JSON object on stderr. All
commands overwrite their outputs deterministically: identical inputs and
seeds give byte-identical files at any --jobs width.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from typing import Optional, Sequence

from templot import evaluation as E
from templot import pipeline as P
from templot import textremoval as T
from templot.core import ImageBuffer, SegmentMask, read_json, write_json
from templot.errors import ConfigError, DataError, TemplotError
from templot.synth import SceneSpec, write_dataset

log = logging.getLogger("templot")


def _require_file(path: str, what: str) -> str:
    if not os.path.isfile(path):
        raise ConfigError(f"{what} not found: {path}")
    return path


def _require_dir(path: str, what: str) -> str:
    if not os.path.isdir(path):
        raise ConfigError(f"{what} not found: {path}")
    return path


def _load_run_config(args: argparse.Namespace) -> P.RunConfig:
    if getattr(args, "config", None):
        cfg = P.RunConfig.from_json(read_json(_require_file(args.config, "config file")))
    else:
        cfg = P.RunConfig()
    updates: dict = {}
    if getattr(args, "dataset", None):
        updates["dataset_dir"] = args.dataset
        updates["oracle"] = True
    if getattr(args, "templates", None):
        updates["templates_index"] = args.templates
    if getattr(args, "images", None):
        updates["images_dir"] = args.images
    if getattr(args, "manifests", None):
        updates["manifests_dir"] = args.manifests
        updates["oracle"] = False
    if getattr(args, "metric", None):
        updates["metric_mode"] = args.metric
    if getattr(args, "metric_source", None):
        updates["metric_source"] = args.metric_source
    if getattr(args, "features", None):
        updates["features_dir"] = args.features
    if getattr(args, "pair_scores", None):
        updates["pair_scores_dir"] = args.pair_scores
    if getattr(args, "perturbation", None) is not None:
        updates["perturbation"] = args.perturbation
    if getattr(args, "distractor_factor", None) is not None:
        updates["distractor_factor"] = args.distractor_factor
    if getattr(args, "text_removal", False):
        updates["text_removal"] = True
    if getattr(args, "font_model", None):
        updates["font_model_path"] = args.font_model
    if getattr(args, "ocr", None):
        updates["ocr_dir"] = args.ocr
    if getattr(args, "no_prune", False):
        updates["prune"] = False
    if getattr(args, "annotate", False):
        updates["annotate"] = True
    if getattr(args, "output", None):
        updates["output_dir"] = args.output
    if getattr(args, "jobs", None) is not None:
        updates["jobs"] = args.jobs
    if getattr(args, "seed", None) is not None:
        updates["seed"] = args.seed
    if getattr(args, "metric_threshold", None) is not None:
        updates["pipeline"] = replace(cfg.pipeline, metric_threshold=args.metric_threshold)
    cfg = replace(cfg, **updates)
    if getattr(args, "set", None):
        cfg = cfg.apply_overrides(args.set)
    return cfg


def _resolve_detect_config(cfg: P.RunConfig) -> P.RunConfig:
    if cfg.dataset_dir:
        _require_dir(cfg.dataset_dir, "dataset directory")
        _require_file(os.path.join(cfg.dataset_dir, "manifest.json"), "dataset manifest")
        if not cfg.templates_index:
            cfg = replace(cfg, templates_index=os.path.join(cfg.dataset_dir, "templates", "index.json"))
    _require_file(cfg.templates_index, "template index")
    if not cfg.oracle:
        if not cfg.manifests_dir:
            raise ConfigError("detect needs either --dataset (oracle mode) or --manifests")
        _require_dir(cfg.manifests_dir, "manifest directory")
    if cfg.metric_source == "files":
        if cfg.metric_mode == "perceptual" and not cfg.pair_scores_dir:
            raise ConfigError("--pair-scores required with --metric-source files")
        if cfg.metric_mode == "embedding" and not cfg.features_dir:
            raise ConfigError("--features required with --metric-source files")
    if cfg.text_removal and not (cfg.font_model_path or cfg.ocr_dir or cfg.dataset_dir):
        raise ConfigError("--text-removal needs --font-model, --ocr, or a dataset with OCR boxes")
    return cfg


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

def cmd_synth(args: argparse.Namespace) -> int:
    spec = SceneSpec(
        width=args.width,
        height=args.height,
        class_count=args.classes,
        icons_min=args.icons_min,
        icons_max=args.icons_max,
        text_density=args.text_density,
        heavy_text_fraction=args.heavy_text_fraction,
        seed=args.seed if args.seed is not None else 0,
    )
    manifest = write_dataset(args.output, spec, args.images, template_size=args.template_size)
    print(json.dumps({"dataset": args.output, "images": manifest["image_count"]}, sort_keys=True))
    return 0


def cmd_detect(args: argparse.Namespace) -> int:
    cfg = _resolve_detect_config(_load_run_config(args))
    os.makedirs(cfg.output_dir, exist_ok=True)
    outputs = P.run_detect(cfg)
    write_json(os.path.join(cfg.output_dir, "run_config.json"), cfg.to_json())
    P.write_detections(os.path.join(cfg.output_dir, "detections.json"), outputs.detections)
    write_json(os.path.join(cfg.output_dir, "counters.json"), outputs.counters.to_json())
    write_json(os.path.join(cfg.output_dir, "timing_report.json"), outputs.timing_report.to_json())
    if outputs.text_masks:
        tm_dir = os.path.join(cfg.output_dir, "textmasks")
        os.makedirs(tm_dir, exist_ok=True)
        for image_id, mask in sorted(outputs.text_masks.items()):
            write_json(os.path.join(tm_dir, f"{image_id}.json"), mask.to_json())
    if cfg.annotate:
        from templot.histfilter import load_templates
        from templot.render import annotate_detections

        names = {
            t.class_id: t.name
            for t in load_templates(cfg.templates_index, cfg.pipeline.histogram_bins_per_channel)
        }
        ann_dir = os.path.join(cfg.output_dir, "annotated")
        os.makedirs(ann_dir, exist_ok=True)
        for image_id, matches in sorted(outputs.per_image.items()):
            if cfg.dataset_dir:
                src = P.Dataset.open(cfg.dataset_dir).image_path(image_id)
            else:
                src = os.path.join(cfg.images_dir, f"{image_id}.png")
            image = ImageBuffer.load_png(src)
            annotate_detections(image, matches, names).save_png(
                os.path.join(ann_dir, f"{image_id}.png")
            )
    print(
        json.dumps(
            {"detections": len(outputs.detections), "counters": outputs.counters.to_json()},
            sort_keys=True,
        )
    )
    return 0


def cmd_remove_text(args: argparse.Namespace) -> int:
    images_dir = _require_dir(args.images, "image directory")
    ocr_dir = _require_dir(args.ocr, "OCR directory")
    os.makedirs(args.output, exist_ok=True)
    image_ids = sorted(
        os.path.splitext(f)[0] for f in os.listdir(images_dir) if f.endswith(".png")
    )
    if not image_ids:
        raise DataError(f"no PNG images in {images_dir}")

    if args.font_model:
        model = T.FontModel.from_json(read_json(_require_file(args.font_model, "font model")))
    else:
        samples, boxes = [], []
        for image_id in image_ids:
            opath = os.path.join(ocr_dir, f"{image_id}.json")
            if not os.path.isfile(opath):
                continue
            ocr = T.load_ocr_boxes(opath)
            if not ocr:
                continue
            samples.append(ImageBuffer.load_png(os.path.join(images_dir, f"{image_id}.png")))
            boxes.append(ocr)
            if len(samples) >= args.samples:
                break
        if not samples:
            raise DataError("no image with OCR boxes; cannot discover a font model")
        model = T.discover_font_model(
            samples, boxes, T.FontDiscoveryParams(sample_count=args.samples, seed=args.seed or 0)
        )
    write_json(os.path.join(args.output, "font_model.json"), model.to_json())

    masks_dir = os.path.join(args.output, "textmasks")
    inpaint_dir = os.path.join(args.output, "inpainted")
    os.makedirs(masks_dir, exist_ok=True)
    os.makedirs(inpaint_dir, exist_ok=True)
    timings = E.StageTimings()
    for image_id in image_ids:
        image = ImageBuffer.load_png(os.path.join(images_dir, f"{image_id}.png"))
        inpainted, mask = P.remove_text_for_image(image, model, timings)
        write_json(os.path.join(masks_dir, f"{image_id}.json"), mask.to_json())
        inpainted.save_png(os.path.join(inpaint_dir, f"{image_id}.png"))
    print(json.dumps({"images": len(image_ids), "font_model": "font_model.json"}, sort_keys=True))
    return 0


def cmd_calibrate(args: argparse.Namespace) -> int:
    cfg = _resolve_detect_config(_load_run_config(args))
    ids = P.list_image_ids(cfg)
    if args.limit is not None:
        ids = ids[: args.limit]
    result = P.calibrate_threshold(cfg, ids)
    os.makedirs(cfg.output_dir, exist_ok=True)
    write_json(os.path.join(cfg.output_dir, "calibration.json"), result)
    print(
        json.dumps(
            {
                "metric_mode": result["metric_mode"],
                "recommended_metric_threshold": result["recommended_metric_threshold"],
                "best_f1": result["best_f1"],
            },
            sort_keys=True,
        )
    )
    return 0


def _image_dims(path: str) -> tuple[int, int]:
    from PIL import Image

    with Image.open(path) as im:
        return im.size  # (w, h)


def cmd_evaluate(args: argparse.Namespace) -> int:
    detections = P.read_detections(_require_file(args.detections, "detections file"))
    if args.dataset:
        dataset = P.Dataset.open(_require_dir(args.dataset, "dataset directory"))
        gt_dir = os.path.join(dataset.root, "annotations")
        images_dir = os.path.join(dataset.root, "images")
        text_dir = args.text_masks or os.path.join(dataset.root, "textmasks")
    else:
        gt_dir = _require_dir(args.ground_truth, "ground truth directory")
        images_dir = _require_dir(args.images, "image directory")
        text_dir = args.text_masks

    annotations = {}
    dims = {}
    for fname in sorted(os.listdir(gt_dir)):
        if not fname.endswith(".json"):
            continue
        ann = E.GroundTruthAnnotation.load(os.path.join(gt_dir, fname))
        annotations[ann.image_id] = ann
        dims[ann.image_id] = _image_dims(os.path.join(images_dir, f"{ann.image_id}.png"))

    text_masks = None
    if text_dir and os.path.isdir(text_dir):
        text_masks = {}
        for image_id in annotations:
            path = os.path.join(text_dir, f"{image_id}.json")
            if os.path.isfile(path):
                text_masks[image_id] = SegmentMask.from_json(read_json(path))
        if not text_masks:
            text_masks = None

    report, bins = P.evaluate_detections(detections, annotations, dims, text_masks)
    os.makedirs(args.output, exist_ok=True)
    write_json(os.path.join(args.output, "metrics.json"), report.to_json())
    if bins is not None:
        with open(os.path.join(args.output, "coverage_report.csv"), "w", encoding="utf-8") as fh:
            fh.write(E.coverage_csv(bins))
    if args.annotate_failures:
        _write_failure_images(args, detections, annotations, dims, images_dir)

    print(f"precision          {report.precision:.4f}")
    print(f"recall             {report.recall:.4f}")
    print(f"misclassification  {report.misclassification_rate:.4f}")
    print(
        "counts             true={} mis={} fp={} missed={} border_excluded={}".format(
            report.true_count,
            report.misclassified_count,
            report.false_positive_count,
            report.missed_count,
            report.excluded_border_gt,
        )
    )
    return 0


def _write_failure_images(args, detections, annotations, dims, images_dir) -> None:
    """Red boxes on misclassified and missed ground truth plus false
    positives; correct detections stay green."""
    from templot.render import annotate_detections

    by_image: dict[str, list] = {}
    for d in detections:
        by_image.setdefault(d.image_id, []).append(d)
    out_dir = os.path.join(args.output, "failures")
    os.makedirs(out_dir, exist_ok=True)
    for image_id, ann in sorted(annotations.items()):
        w, h = dims[image_id]
        kept, _ = E.filter_border_gt(ann.entries, w, h)
        dets = by_image.get(image_id, [])
        report = E.match(dets, kept)
        matched_dets = {di for _, di in report.true_detections}
        failures = [kept[gi].bbox for gi in report.missed_gt]
        failures += [kept[gi].bbox for gi, _ in report.misclassified]
        failures += [dets[di].bbox for di in report.false_positives]
        good = [dets[di] for di in sorted(matched_dets)]
        image = ImageBuffer.load_png(os.path.join(images_dir, f"{image_id}.png"))
        annotate_detections(image, good, None, failures=failures).save_png(
            os.path.join(out_dir, f"{image_id}.png")
        )


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = _resolve_detect_config(_load_run_config(args))
    os.makedirs(cfg.output_dir, exist_ok=True)
    outputs = P.run_detect(cfg)
    report = outputs.timing_report
    write_json(os.path.join(cfg.output_dir, "timing_report.json"), report.to_json())
    from templot.kernels import BACKEND

    print(f"kernel backend: {BACKEND}")
    print(f"images: {report.image_count}  icon proposals: {report.proposal_count}")
    print("stage                       mean ms   basis")
    for stage in E.PER_IMAGE_STAGES:
        if stage in report.per_image_ms:
            print(f"{stage:<26}{report.per_image_ms[stage]:>10.2f}   per image")
    for stage in E.PER_ICON_STAGES:
        if stage in report.per_icon_ms:
            print(f"{stage:<26}{report.per_icon_ms[stage]:>10.3f}   per icon")
    return 0


def _validate_manifest(path: str):
    from templot.proposals import load_manifest

    return load_manifest(path)


def _validate_features(path: str):
    from templot.classify import read_features

    return read_features(path)


def _validate_pair_scores(path: str):
    from templot.classify import read_pair_scores

    return read_pair_scores(path)


_VALIDATORS = {
    "manifest": _validate_manifest,
    "features": _validate_features,
    "pair-scores": _validate_pair_scores,
    "ocr": T.load_ocr_boxes,
    "ground-truth": E.GroundTruthAnnotation.load,
    "detections": P.read_detections,
    "textmask": lambda path: SegmentMask.from_json(read_json(path)),
}


def cmd_validate(args: argparse.Namespace) -> int:
    validator = _VALIDATORS.get(args.kind)
    if validator is None:
        raise ConfigError(f"unknown kind {args.kind!r}; choose from {sorted(_VALIDATORS)}")
    checked = []
    for path in args.paths:
        _require_file(path, f"{args.kind} file")
        validator(path)
        checked.append(path)
    print(json.dumps({"kind": args.kind, "valid": checked}, sort_keys=True))
    return 0


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON run config; flags override its fields")
    sub.add_argument("--set", action="append", metavar="PATH=VALUE",
                     help="dotted-path config override, repeatable")
    sub.add_argument("--jobs", type=int, default=None, help="parallel image workers")
    sub.add_argument("--seed", type=int, default=None, help="base random seed")
    sub.add_argument("--output", "-o", default="out", help="output directory")


def _add_detect_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--dataset", help="synthetic dataset directory (enables oracle mode)")
    sub.add_argument("--templates", help="template index JSON")
    sub.add_argument("--images", help="image directory")
    sub.add_argument("--manifests", help="proposal manifest directory (backend mode)")
    sub.add_argument("--perturbation", type=int, default=None, help="oracle mask perturbation, px")
    sub.add_argument("--distractor-factor", type=float, default=None,
                     help="oracle distractor count as a multiple of icon count")
    sub.add_argument("--metric", choices=("perceptual", "embedding"), default=None)
    sub.add_argument("--metric-source", choices=("builtin", "files"), default=None)
    sub.add_argument("--metric-threshold", type=float, default=None,
                     help="metric threshold in the mode's native convention")
    sub.add_argument("--features", help="feature file directory (embedding files mode)")
    sub.add_argument("--pair-scores", help="pair-score directory (perceptual files mode)")
    sub.add_argument("--text-removal", action="store_true", help="mask and inpaint text first")
    sub.add_argument("--font-model", help="reuse a discovered font model JSON")
    sub.add_argument("--ocr", help="OCR box directory (for font discovery)")
    sub.add_argument("--no-prune", action="store_true",
                     help="disable the size prefilter and correlation shortlist")
    sub.add_argument("--annotate", action="store_true", help="write annotated PNGs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="templot",
        description="Training-free template-based icon detection pipeline.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    s = subs.add_parser("synth", help="generate a synthetic dataset")
    s.add_argument("--images", type=int, default=10, help="number of scenes")
    s.add_argument("--classes", type=int, default=20)
    s.add_argument("--width", type=int, default=1800)
    s.add_argument("--height", type=int, default=697)
    s.add_argument("--icons-min", type=int, default=8)
    s.add_argument("--icons-max", type=int, default=14)
    s.add_argument("--text-density", type=float, default=0.0)
    s.add_argument("--heavy-text-fraction", type=float, default=0.6)
    s.add_argument("--template-size", type=int, default=48)
    _add_common(s)
    s.set_defaults(func=cmd_synth)

    d = subs.add_parser("detect", help="run the detection pipeline")
    _add_detect_flags(d)
    _add_common(d)
    d.set_defaults(func=cmd_detect)

    r = subs.add_parser("remove-text", help="discover font color, mask and inpaint text")
    r.add_argument("--images", required=True, help="image directory")
    r.add_argument("--ocr", required=True, help="OCR box directory")
    r.add_argument("--samples", type=int, default=3, help="sample images for discovery")
    r.add_argument("--font-model", help="reuse an existing font model JSON")
    _add_common(r)
    r.set_defaults(func=cmd_remove_text)

    c = subs.add_parser("calibrate", help="pick the F1-optimal metric threshold")
    _add_detect_flags(c)
    c.add_argument("--limit", type=int, default=None, help="use only the first N images")
    _add_common(c)
    c.set_defaults(func=cmd_calibrate)

    e = subs.add_parser("evaluate", help="match detections to ground truth and report metrics")
    e.add_argument("--detections", required=True, help="detections JSON file")
    e.add_argument("--dataset", help="synthetic dataset directory")
    e.add_argument("--ground-truth", help="annotation directory (when no dataset)")
    e.add_argument("--images", help="image directory (when no dataset)")
    e.add_argument("--text-masks", help="text mask directory for the coverage report")
    e.add_argument("--annotate-failures", action="store_true",
                   help="write images with missed/misclassified/false boxes in red")
    _add_common(e)
    e.set_defaults(func=cmd_evaluate)

    b = subs.add_parser("bench", help="run detect with instrumentation and print stage timings")
    _add_detect_flags(b)
    _add_common(b)
    b.set_defaults(func=cmd_bench)

    v = subs.add_parser("validate", help="validate interchange files against the schemas")
    v.add_argument("--kind", required=True, choices=sorted(_VALIDATORS))
    v.add_argument("paths", nargs="+")
    v.set_defaults(func=cmd_validate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=os.environ.get("TEMPLOT_LOG", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2
    except DataError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 3
    except TemplotError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 4
    except Exception as exc:  # invariant violations and unexpected failures
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
