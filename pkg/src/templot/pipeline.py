"""Batch detection pipeline: wiring of proposals, filtering, classification,
NMS, optional text removal, and report writing.

Each image is processed independently (worker pool), results are merged in
canonical order, so reruns and any --jobs width produce byte-identical
outputs.
"""

from __future__ import annotations

import dataclasses
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence

import numpy as np

from templot import classify as C
from templot import evaluation as E
from templot import histfilter as H
from templot import textremoval as T
from templot.core import (
    BoundingBox,
    ImageBuffer,
    PipelineConfig,
    SegmentMask,
    read_json,
    write_json,
)
from templot.errors import ConfigError, DataError, SchemaError
from templot.histfilter import TemplateEntry
from templot.proposals import (
    Proposal,
    SceneTruth,
    load_manifest,
    load_manifest_masks,
    make_proposal,
    oracle_segment,
)


@dataclass(frozen=True)
class RunConfig:
    """Everything a detect/bench run needs; mirrors the JSON config file."""

    templates_index: str = ""
    images_dir: str = ""
    manifests_dir: Optional[str] = None
    oracle: bool = False
    dataset_dir: Optional[str] = None
    perturbation: int = 0
    distractor_factor: float = 2.0
    metric_mode: str = "perceptual"       # perceptual | embedding
    metric_source: str = "builtin"        # builtin | files
    features_dir: Optional[str] = None
    pair_scores_dir: Optional[str] = None
    text_removal: bool = False
    font_model_path: Optional[str] = None
    ocr_dir: Optional[str] = None
    output_dir: str = "out"
    annotate: bool = False
    prune: bool = True
    jobs: int = 1
    seed: int = 0
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)

    def to_json(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["pipeline"] = self.pipeline.to_json()
        return d

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(raw)
        if "pipeline" in kwargs and kwargs["pipeline"] is not None:
            kwargs["pipeline"] = PipelineConfig.from_json(kwargs["pipeline"])
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad run config: {exc}") from exc

    def apply_overrides(self, overrides: Sequence[str]) -> "RunConfig":
        """Dotted-path overrides, e.g. pipeline.correlation_threshold=0.4."""
        doc = self.to_json()
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} must look like key=value")
            path, value = item.split("=", 1)
            node = doc
            parts = path.split(".")
            for p in parts[:-1]:
                if p not in node or not isinstance(node[p], dict):
                    raise ConfigError(f"unknown config path {path!r}")
                node = node[p]
            leaf = parts[-1]
            if leaf not in node:
                raise ConfigError(f"unknown config path {path!r}")
            import json as _json

            try:
                node[leaf] = _json.loads(value)
            except _json.JSONDecodeError:
                node[leaf] = value
        return RunConfig.from_json(doc)


@dataclass(frozen=True)
class Detection:
    image_id: str
    class_id: int
    score: float
    bbox: BoundingBox
    metric: str

    def to_json(self) -> dict[str, Any]:
        return {
            "image_id": self.image_id,
            "class_id": self.class_id,
            "score": self.score,
            "bbox": self.bbox.as_list(),
            "metric": self.metric,
        }

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "Detection":
        try:
            return cls(
                image_id=str(raw["image_id"]),
                class_id=int(raw["class_id"]),
                score=float(raw["score"]),
                bbox=BoundingBox.from_list(raw["bbox"]),
                metric=str(raw["metric"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad detection entry: {exc}") from exc


def write_detections(path: str, detections: Sequence[Detection]) -> None:
    write_json(path, [d.to_json() for d in detections])


def read_detections(path: str) -> list[Detection]:
    raw = read_json(path)
    if not isinstance(raw, list):
        raise SchemaError(f"{path}: detections must be a JSON list")
    return [Detection.from_json(item) for item in raw]


@dataclass
class StageCounters:
    proposals: int = 0
    empty_dropped: int = 0
    area_rejected: int = 0
    withdrawn: int = 0
    pairs_evaluated: int = 0
    pairs_failed: int = 0
    detections_pre_nms: int = 0
    detections: int = 0

    def merge(self, other: "StageCounters") -> None:
        for f in dataclasses.fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))

    def to_json(self) -> dict[str, int]:
        return dataclasses.asdict(self)


# --------------------------------------------------------------------------
# Scorers
# --------------------------------------------------------------------------

class BuiltinPerceptualScorer:
    """Patch dissimilarity against preprocessed template tensors.

    Template tensors are shareable read-only assets; the per-proposal cache
    makes an instance single-image (proposal ids restart per image)."""

    name = "perceptual"

    def __init__(self, templates: Sequence[TemplateEntry], tensors: Optional[dict] = None):
        self._tensors = tensors if tensors is not None else {
            t.class_id: C.preprocess_crop(t.image) for t in templates
        }
        self._last: tuple[int, np.ndarray] | None = None

    def fresh(self) -> "BuiltinPerceptualScorer":
        return BuiltinPerceptualScorer((), tensors=self._tensors)

    def _proposal_tensor(self, proposal: Proposal) -> np.ndarray:
        if self._last is None or self._last[0] != proposal.id:
            self._last = (proposal.id, C.preprocess_crop(proposal.crop))
        return self._last[1]

    def __call__(self, proposal: Proposal, template: TemplateEntry) -> float:
        return C.patch_dissimilarity_pre(self._proposal_tensor(proposal), self._tensors[template.class_id])


class BuiltinEmbeddingScorer:
    """Cosine dissimilarity of min-max scaled pooled features. Same sharing
    contract as the perceptual scorer."""

    name = "embedding"

    def __init__(self, templates: Sequence[TemplateEntry], assets: Optional[tuple] = None):
        if assets is not None:
            self.stats, self._scaled = assets
        else:
            raw = {t.class_id: C.reference_extract(t.image) for t in templates}
            self.stats = C.TemplateFeatureStats.from_vectors(list(raw.values()))
            self._scaled = {cid: C.minmax_scale(v, self.stats) for cid, v in raw.items()}
        self._last: tuple[int, np.ndarray] | None = None

    def fresh(self) -> "BuiltinEmbeddingScorer":
        return BuiltinEmbeddingScorer((), assets=(self.stats, self._scaled))

    def _proposal_vector(self, proposal: Proposal) -> np.ndarray:
        if self._last is None or self._last[0] != proposal.id:
            vec = C.minmax_scale(C.reference_extract(proposal.crop), self.stats)
            self._last = (proposal.id, vec)
        return self._last[1]

    def __call__(self, proposal: Proposal, template: TemplateEntry) -> float:
        return C.embedding_dissimilarity(self._proposal_vector(proposal), self._scaled[template.class_id])


class FilePairScorer:
    """Scores from an external pairwise backend's pair-score file."""

    name = "perceptual"

    def __init__(self, table: dict[tuple[int, int], float]):
        self._table = table

    def __call__(self, proposal: Proposal, template: TemplateEntry) -> float:
        key = (proposal.id, template.class_id)
        if key not in self._table:
            raise DataError(f"pair score missing for proposal {key[0]} class {key[1]}")
        return self._table[key]


class FileEmbeddingScorer:
    """Cosine dissimilarity over externally computed feature files."""

    name = "embedding"

    def __init__(self, template_features: dict[int, np.ndarray], proposal_features: dict[int, np.ndarray]):
        self.stats = C.TemplateFeatureStats.from_vectors(list(template_features.values()))
        self._templates = {cid: C.minmax_scale(v, self.stats) for cid, v in template_features.items()}
        self._proposals = proposal_features

    def __call__(self, proposal: Proposal, template: TemplateEntry) -> float:
        if proposal.id not in self._proposals:
            raise DataError(f"feature row missing for proposal {proposal.id}")
        vec = C.minmax_scale(self._proposals[proposal.id], self.stats)
        return C.embedding_dissimilarity(vec, self._templates[template.class_id])


# --------------------------------------------------------------------------
# Dataset access (synth layout)
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Dataset:
    root: str
    image_ids: list[str]

    @classmethod
    def open(cls, root: str) -> "Dataset":
        manifest_path = os.path.join(root, "manifest.json")
        if not os.path.isfile(manifest_path):
            raise ConfigError(f"dataset manifest not found: {manifest_path}")
        manifest = read_json(manifest_path)
        try:
            ids = [str(i) for i in manifest["image_ids"]]
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"{manifest_path}: missing image_ids: {exc}") from exc
        return cls(root=root, image_ids=ids)

    def image_path(self, image_id: str) -> str:
        return os.path.join(self.root, "images", f"{image_id}.png")

    def masks_manifest_path(self, image_id: str) -> str:
        return os.path.join(self.root, "masks", f"{image_id}.json")

    def annotation_path(self, image_id: str) -> str:
        return os.path.join(self.root, "annotations", f"{image_id}.json")

    def ocr_path(self, image_id: str) -> str:
        return os.path.join(self.root, "ocr", f"{image_id}.json")

    def textmask_path(self, image_id: str) -> str:
        return os.path.join(self.root, "textmasks", f"{image_id}.json")

    def templates_index(self) -> str:
        return os.path.join(self.root, "templates", "index.json")

    def ground_truth(self, image_id: str) -> E.GroundTruthAnnotation:
        return E.GroundTruthAnnotation.load(self.annotation_path(image_id))


# --------------------------------------------------------------------------
# Per-image processing
# --------------------------------------------------------------------------

def _image_seed(base_seed: int, image_id: str) -> int:
    digest = 0
    for ch in image_id:
        digest = (digest * 131 + ord(ch)) % (2 ** 31)
    return (base_seed * 1_000_003 + digest) % (2 ** 31)


@dataclass
class ImageResult:
    image_id: str
    matches: list[C.MatchResult]
    counters: StageCounters
    timings: E.StageTimings
    text_mask: Optional[SegmentMask] = None


def build_scorer(
    cfg: RunConfig,
    templates: Sequence[TemplateEntry],
    image_id: Optional[str] = None,
    shared=None,
):
    if cfg.metric_source == "builtin":
        if shared is not None:
            return shared.fresh()
        if cfg.metric_mode == "perceptual":
            return BuiltinPerceptualScorer(templates)
        if cfg.metric_mode == "embedding":
            return BuiltinEmbeddingScorer(templates)
        raise ConfigError(f"unknown metric mode {cfg.metric_mode!r}")
    if cfg.metric_source == "files":
        if cfg.metric_mode == "perceptual":
            if not cfg.pair_scores_dir:
                raise ConfigError("pair_scores_dir required for metric_source=files")
            table = C.read_pair_scores(os.path.join(cfg.pair_scores_dir, f"{image_id}.json"))
            return FilePairScorer(table)
        if cfg.metric_mode == "embedding":
            if not cfg.features_dir:
                raise ConfigError("features_dir required for metric_source=files")
            t_ids, t_mat = C.read_features(os.path.join(cfg.features_dir, "templates.tbof"))
            p_ids, p_mat = C.read_features(os.path.join(cfg.features_dir, f"{image_id}.tbof"))
            return FileEmbeddingScorer(
                {cid: t_mat[i] for i, cid in enumerate(t_ids)},
                {pid: p_mat[i] for i, pid in enumerate(p_ids)},
            )
        raise ConfigError(f"unknown metric mode {cfg.metric_mode!r}")
    raise ConfigError(f"unknown metric source {cfg.metric_source!r}")


def gather_proposals(
    cfg: RunConfig,
    image_id: str,
    image: ImageBuffer,
    timings: E.StageTimings,
    counters: StageCounters,
    text_boxes: Sequence[BoundingBox] = (),
) -> list[Proposal]:
    """Oracle proposal geometry for one image: ground-truth masks perturbed
    and mixed with distractors. Crops are cut from `image`, which is the
    inpainted buffer when text removal ran."""
    with timings.timed("segmentation_ingest"):
        dataset = Dataset.open(cfg.dataset_dir)
        _, masks, _confs = load_manifest_masks(dataset.masks_manifest_path(image_id))
        icon_masks = [m for m in masks if m.area > 0]
        counters.empty_dropped += len(masks) - len(icon_masks)
        truth = SceneTruth(
            image=image,
            icon_masks=icon_masks,
            text_boxes=list(text_boxes),
        )
        proposals = oracle_segment(
            truth,
            perturbation=cfg.perturbation,
            seed=_image_seed(cfg.seed, image_id),
            distractor_factor=cfg.distractor_factor,
        )
    counters.proposals += len(proposals)
    timings.proposal_count += len(proposals)
    return proposals


def classify_image(
    cfg: RunConfig,
    proposals: Sequence[Proposal],
    templates: Sequence[TemplateEntry],
    scorer,
    timings: E.StageTimings,
    counters: StageCounters,
) -> list[C.MatchResult]:
    p = cfg.pipeline
    threshold = p.resolved_metric_threshold(cfg.metric_mode)
    matches: list[C.MatchResult] = []
    for proposal in proposals:
        with timings.timed("histogram_comparison"):
            if cfg.prune and not H.area_prefilter(proposal.mask_area, templates, p.area_ratio_bounds):
                counters.area_rejected += 1
                continue
            hist = H.compute_histogram(
                proposal.crop,
                mask=proposal.mask_crop if p.masked_histograms else None,
                bins_per_channel=p.histogram_bins_per_channel,
            )
            if cfg.prune:
                listed = H.shortlist(hist, templates, p.correlation_threshold, p.shortlist_factor)
                if not listed:
                    counters.withdrawn += 1
                    continue
            else:
                scored = [(t, H.correlation_or_zero(hist, t.histogram)) for t in templates]
                scored.sort(key=lambda tc: (-tc[1], tc[0].class_id))
                listed = scored
        with timings.timed("classification"):
            outcome = C.classify_proposal(proposal, listed, scorer, threshold)
        counters.pairs_evaluated += outcome.pairs_evaluated
        counters.pairs_failed += outcome.pairs_failed
        if outcome.result is not None:
            matches.append(outcome.result)
    counters.detections_pre_nms += len(matches)
    with timings.timed("nms"):
        kept = C.nms(matches, p.nms_overlap, p.overlap_mode)
    counters.detections += len(kept)
    return kept


def remove_text_for_image(
    image: ImageBuffer,
    font_model: T.FontModel,
    timings: E.StageTimings,
) -> tuple[ImageBuffer, SegmentMask]:
    with timings.timed("mask_generation"):
        raw = T.mask_from_cluster(image, font_model.ica, font_model.cluster)
        cleaned = T.clean_text_mask(raw)
    with timings.timed("inpainting"):
        inpainted = T.naive_inpaint(image, cleaned)
    return inpainted, cleaned


def process_image(
    cfg: RunConfig,
    image_id: str,
    templates: Sequence[TemplateEntry],
    font_model: Optional[T.FontModel],
    shared_scorer=None,
) -> ImageResult:
    timings = E.StageTimings()
    timings.image_count = 1
    counters = StageCounters()
    text_mask: Optional[SegmentMask] = None

    if cfg.oracle:
        dataset = Dataset.open(cfg.dataset_dir)
        image = ImageBuffer.load_png(dataset.image_path(image_id))
        ocr_path = dataset.ocr_path(image_id)
        text_boxes = [b.bbox for b in T.load_ocr_boxes(ocr_path)] if os.path.isfile(ocr_path) else []
        if cfg.text_removal:
            if font_model is None:
                raise ConfigError("text_removal requires a font model")
            image, text_mask = remove_text_for_image(image, font_model, timings)
        proposals = gather_proposals(cfg, image_id, image, timings, counters, text_boxes)
    else:
        if not cfg.manifests_dir:
            raise ConfigError("manifests_dir required when oracle mode is off")
        with timings.timed("segmentation_ingest"):
            loaded = load_manifest(os.path.join(cfg.manifests_dir, f"{image_id}.json"))
        counters.empty_dropped += loaded.empty_dropped
        image = loaded.image
        if cfg.text_removal:
            if font_model is None:
                raise ConfigError("text_removal requires a font model")
            image, text_mask = remove_text_for_image(image, font_model, timings)
            proposals = [
                make_proposal(p.id, image, p.mask.to_bitmap(), p.source_confidence, mask=p.mask)
                for p in loaded.proposals
            ]
        else:
            proposals = loaded.proposals
        counters.proposals += len(proposals)
        timings.proposal_count += len(proposals)

    scorer = build_scorer(cfg, templates, image_id, shared=shared_scorer)
    matches = classify_image(cfg, proposals, templates, scorer, timings, counters)
    return ImageResult(
        image_id=image_id,
        matches=matches,
        counters=counters,
        timings=timings,
        text_mask=text_mask,
    )


# --------------------------------------------------------------------------
# Run drivers
# --------------------------------------------------------------------------

@dataclass
class DetectOutputs:
    detections: list[Detection]
    counters: StageCounters
    timing_report: E.TimingReport
    per_image: dict[str, list[C.MatchResult]]
    text_masks: dict[str, SegmentMask]


def list_image_ids(cfg: RunConfig) -> list[str]:
    if cfg.oracle or cfg.dataset_dir:
        return Dataset.open(cfg.dataset_dir).image_ids
    if cfg.manifests_dir:
        ids = [
            os.path.splitext(f)[0]
            for f in os.listdir(cfg.manifests_dir)
            if f.endswith(".json")
        ]
        return sorted(ids)
    raise ConfigError("no image source configured (dataset_dir or manifests_dir)")


def ensure_font_model(cfg: RunConfig, image_ids: Sequence[str]) -> Optional[T.FontModel]:
    if not cfg.text_removal:
        return None
    if cfg.font_model_path and os.path.isfile(cfg.font_model_path):
        return T.FontModel.from_json(read_json(cfg.font_model_path))
    samples: list[ImageBuffer] = []
    boxes: list[list[T.OcrBox]] = []
    params = T.FontDiscoveryParams(seed=cfg.seed)
    for image_id in image_ids:
        if cfg.oracle or cfg.dataset_dir:
            dataset = Dataset.open(cfg.dataset_dir)
            ipath = dataset.image_path(image_id)
            opath = dataset.ocr_path(image_id)
        else:
            if not cfg.ocr_dir:
                raise ConfigError("text_removal needs ocr_dir or a font model file")
            ipath = os.path.join(cfg.images_dir, f"{image_id}.png")
            opath = os.path.join(cfg.ocr_dir, f"{image_id}.json")
        if not os.path.isfile(opath):
            continue
        ocr = T.load_ocr_boxes(opath)
        if not ocr:
            continue
        samples.append(ImageBuffer.load_png(ipath))
        boxes.append(ocr)
        if len(samples) >= params.sample_count:
            break
    if not samples:
        raise DataError("no sample image with OCR boxes; cannot discover font model")
    return T.discover_font_model(samples, boxes, params)


def run_detect(cfg: RunConfig) -> DetectOutputs:
    image_ids = list_image_ids(cfg)
    templates = H.load_templates(
        cfg.templates_index, bins_per_channel=cfg.pipeline.histogram_bins_per_channel
    )
    font_model = ensure_font_model(cfg, image_ids)
    shared_scorer = build_scorer(cfg, templates) if cfg.metric_source == "builtin" else None

    def work(image_id: str) -> ImageResult:
        return process_image(cfg, image_id, templates, font_model, shared_scorer)

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(work, image_ids))
    else:
        results = [work(i) for i in image_ids]

    results.sort(key=lambda r: r.image_id)
    counters = StageCounters()
    timings = E.StageTimings()
    detections: list[Detection] = []
    per_image: dict[str, list[C.MatchResult]] = {}
    text_masks: dict[str, SegmentMask] = {}
    for r in results:
        counters.merge(r.counters)
        timings.merge(r.timings)
        per_image[r.image_id] = r.matches
        if r.text_mask is not None:
            text_masks[r.image_id] = r.text_mask
        for m in sorted(
            r.matches,
            key=lambda m: (m.score, m.class_id, (m.bbox.x_min, m.bbox.y_min, m.bbox.x_max, m.bbox.y_max)),
        ):
            detections.append(
                Detection(
                    image_id=r.image_id,
                    class_id=m.class_id,
                    score=m.score,
                    bbox=m.bbox,
                    metric=cfg.metric_mode,
                )
            )
    return DetectOutputs(
        detections=detections,
        counters=counters,
        timing_report=E.collect_timings(timings),
        per_image=per_image,
        text_masks=text_masks,
    )


def candidates_for_sweep(cfg: RunConfig, image_ids: Optional[Sequence[str]] = None):
    """Unthresholded best-per-proposal matches plus border-filtered ground
    truth, the inputs the threshold sweep and calibrate need."""
    sweep_cfg = replace(
        cfg, pipeline=replace(cfg.pipeline, metric_threshold=float("inf")), annotate=False
    )
    ids = list(image_ids) if image_ids is not None else list_image_ids(sweep_cfg)
    templates = H.load_templates(
        sweep_cfg.templates_index, bins_per_channel=sweep_cfg.pipeline.histogram_bins_per_channel
    )
    font_model = ensure_font_model(sweep_cfg, ids)
    dataset = Dataset.open(sweep_cfg.dataset_dir) if sweep_cfg.dataset_dir else None
    shared_scorer = (
        build_scorer(sweep_cfg, templates) if sweep_cfg.metric_source == "builtin" else None
    )
    candidates: dict[str, list[C.MatchResult]] = {}
    gt: dict[str, list[E.GroundTruthEntry]] = {}
    for image_id in ids:
        timings = E.StageTimings()
        counters = StageCounters()
        if dataset is None:
            raise ConfigError("calibrate requires a dataset directory")
        image = ImageBuffer.load_png(dataset.image_path(image_id))
        ocr_path = dataset.ocr_path(image_id)
        text_boxes = [b.bbox for b in T.load_ocr_boxes(ocr_path)] if os.path.isfile(ocr_path) else []
        if sweep_cfg.text_removal and font_model is not None:
            image, _ = remove_text_for_image(image, font_model, timings)
        proposals = gather_proposals(sweep_cfg, image_id, image, timings, counters, text_boxes)
        scorer = build_scorer(sweep_cfg, templates, image_id, shared=shared_scorer)
        # threshold inf: every proposal with a non-empty shortlist yields a candidate
        matches = classify_image(sweep_cfg, proposals, templates, scorer, timings, counters)
        candidates[image_id] = matches
        annotation = dataset.ground_truth(image_id)
        kept, excluded = E.filter_border_gt(annotation.entries, image.width, image.height)
        gt[image_id] = kept
    return candidates, gt


def calibrate_threshold(
    cfg: RunConfig, image_ids: Optional[Sequence[str]] = None
) -> dict[str, Any]:
    """Sweep candidate scores and return the F1-optimal metric threshold
    (midpoint of the optimal plateau), in both internal and configured
    conventions.

    The sweep runs on the operating pipeline (pruning on). When the
    correlation filter leaves nothing above the accepted scores, the
    plateau is unbounded and the operating point gets 25% headroom; that
    headroom is then capped below the score floor of the filter-rejected
    proposals (measured by an unpruned pass over the same images) whenever
    that floor sits cleanly above every accepted score, so the prefilter
    stays a pure speedup at the recommended threshold.
    """
    candidates, gt = candidates_for_sweep(cfg, image_ids)
    scores = sorted({m.score for ms in candidates.values() for m in ms})
    if not scores:
        raise DataError("no candidate matches; cannot calibrate")
    grid: list[float] = [scores[0] / 2 if scores[0] > 0 else -1e-9]
    for a, b in zip(scores, scores[1:]):
        grid.append((a + b) / 2)
    grid.append(scores[-1] + max(1e-6, scores[-1] * 0.01))

    # candidates were produced with an unfiltered threshold, so NMS must
    # re-run per grid point; sweep_threshold does exactly that
    rows = C.sweep_threshold(
        candidates, gt, grid, cfg.pipeline.nms_overlap, cfg.pipeline.overlap_mode
    )
    best_f1 = max(r["f1"] for r in rows)
    optimal = [i for i, r in enumerate(rows) if r["f1"] == best_f1]
    run_end = optimal[0]
    while run_end + 1 in optimal:
        run_end += 1
    if run_end == len(rows) - 1:
        dissimilarity = scores[-1] * 1.25
    else:
        first_run = optimal[: optimal.index(run_end) + 1]
        dissimilarity = rows[first_run[len(first_run) // 2]]["threshold"]

    pruned_keys = {
        (image_id, m.proposal_id): m.class_id
        for image_id, ms in candidates.items()
        for m in ms
    }
    unpruned, _ = candidates_for_sweep(replace(cfg, prune=False), image_ids)
    rejected = [
        m.score
        for image_id, ms in unpruned.items()
        for m in ms
        if pruned_keys.get((image_id, m.proposal_id)) != m.class_id
    ]
    rejected_floor = min(rejected) if rejected else None
    if rejected_floor is not None and rejected_floor > scores[-1]:
        dissimilarity = min(dissimilarity, (scores[-1] + rejected_floor) / 2)

    configured = 1.0 - dissimilarity if cfg.metric_mode == "embedding" else dissimilarity
    return {
        "metric_mode": cfg.metric_mode,
        "dissimilarity_threshold": dissimilarity,
        "recommended_metric_threshold": configured,
        "best_f1": best_f1,
        "rejected_score_floor": rejected_floor,
        "rows": rows,
    }


def evaluate_detections(
    detections: Sequence[Detection],
    annotations: dict[str, E.GroundTruthAnnotation],
    image_dims: dict[str, tuple[int, int]],
    text_masks: Optional[dict[str, SegmentMask]] = None,
    bin_width: float = 0.1,
    mutual: bool = True,
) -> tuple[E.MetricsReport, Optional[list[E.CoverageBin]]]:
    """Apply the full evaluation protocol to a detection set."""
    by_image: dict[str, list[Detection]] = {}
    for d in detections:
        by_image.setdefault(d.image_id, []).append(d)
    reports = []
    per_gt_coverage: list[tuple[float, bool]] = []
    for image_id in sorted(annotations):
        annotation = annotations[image_id]
        w, h = image_dims[image_id]
        kept, excluded = E.filter_border_gt(annotation.entries, w, h)
        dets = by_image.get(image_id, [])
        report = E.match(dets, kept, mutual=mutual)
        report.excluded_border_gt = excluded
        reports.append(report)
        if text_masks is not None and image_id in text_masks:
            matched_gt = {gi for gi, _ in report.true_detections}
            mask = text_masks[image_id]
            for gi, entry in enumerate(kept):
                cov = T.text_coverage(entry.bbox, mask)
                per_gt_coverage.append((cov, gi in matched_gt))
    merged = E.merge_reports(reports)
    metrics_report = E.metrics(merged)
    bins = E.coverage_bins(per_gt_coverage, bin_width) if per_gt_coverage else None
    return metrics_report, bins
