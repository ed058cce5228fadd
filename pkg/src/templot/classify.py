"""Similarity scoring, best-template selection, and non-maximum suppression.

All scores are dissimilarities (lower is better). The built-in metrics are
deterministic stand-ins with the same contracts as the external backends:
a pairwise patch metric and a pooled-feature embedding metric. External
backends talk through the feature file and pair-score file formats below.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from templot.core import BoundingBox, ImageBuffer, SegmentMask, coverage, iou, read_json
from templot.errors import DataError, DimensionMismatch, SchemaError, ZeroVector
from templot.histfilter import TemplateEntry
from templot.proposals import Proposal

IMAGENET_MEAN = np.array([0.485, 0.456, 0.406], dtype=np.float64)
IMAGENET_STD = np.array([0.229, 0.224, 0.225], dtype=np.float64)

INPUT_SIDE = 224
POOL_GRID = 16  # reference features: 16x16x3 pooled = 768 dims

FEATURE_MAGIC = b"TBOF"
FEATURE_VERSION = 1


@dataclass(frozen=True)
class TemplateFeatureStats:
    """Per-dimension min and max over the template feature vectors."""

    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self) -> None:
        if self.mins.shape != self.maxs.shape:
            raise DimensionMismatch("stats min/max shapes differ")
        if np.any(self.mins > self.maxs):
            raise DimensionMismatch("stats require min <= max per dimension")

    @classmethod
    def from_vectors(cls, vectors: Sequence[np.ndarray]) -> "TemplateFeatureStats":
        stacked = np.stack(vectors)
        return cls(mins=stacked.min(axis=0), maxs=stacked.max(axis=0))


@dataclass(frozen=True)
class MatchResult:
    class_id: int
    score: float
    bbox: BoundingBox
    mask: SegmentMask
    proposal_id: int = -1


def bilinear_resize(values: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Edge-clamped bilinear resample of an (h, w, c) float array."""
    h, w = values.shape[:2]
    ys = np.clip((np.arange(out_h, dtype=np.float64) + 0.5) * (h / out_h) - 0.5, 0, h - 1)
    xs = np.clip((np.arange(out_w, dtype=np.float64) + 0.5) * (w / out_w) - 0.5, 0, w - 1)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]
    v = values.astype(np.float64)
    top = v[y0][:, x0] * (1 - wx) + v[y0][:, x1] * wx
    bot = v[y1][:, x0] * (1 - wx) + v[y1][:, x1] * wx
    return top * (1 - wy) + bot * wy


def preprocess_crop(crop: ImageBuffer) -> np.ndarray:
    """Resize to 224x224 and normalize with the ImageNet mean and std.

    RGBA crops are alpha-composited over mid-gray (128) before resizing so
    transparent template regions contribute a neutral value.
    """
    px = crop.pixels.astype(np.float64)
    if crop.channels == 4:
        alpha = px[:, :, 3:4] / 255.0
        rgb = px[:, :, :3] * alpha + 128.0 * (1.0 - alpha)
    else:
        rgb = px[:, :, :3]
    resized = bilinear_resize(rgb, INPUT_SIDE, INPUT_SIDE)
    return (resized / 255.0 - IMAGENET_MEAN) / IMAGENET_STD


def reference_extract(crop: ImageBuffer) -> np.ndarray:
    """Deterministic pooled-feature extractor: preprocess, average-pool to
    16x16x3, flatten, L2-normalize."""
    tensor = preprocess_crop(crop)
    block = INPUT_SIDE // POOL_GRID
    pooled = tensor.reshape(POOL_GRID, block, POOL_GRID, block, 3).mean(axis=(1, 3))
    flat = pooled.reshape(-1)
    norm = float(np.linalg.norm(flat))
    if norm < 1e-12:
        return np.zeros_like(flat)
    return flat / norm


def minmax_scale(vector: np.ndarray, stats: TemplateFeatureStats) -> np.ndarray:
    """Scale each dimension by the template-derived min/max; degenerate
    dimensions (min == max) map to 0.5."""
    if vector.shape != stats.mins.shape:
        raise DimensionMismatch(
            f"vector dim {vector.shape} vs stats dim {stats.mins.shape}"
        )
    span = stats.maxs - stats.mins
    out = np.full_like(vector, 0.5, dtype=np.float64)
    ok = span != 0
    out[ok] = (vector[ok] - stats.mins[ok]) / span[ok]
    return out


def embedding_dissimilarity(a: np.ndarray, b: np.ndarray) -> float:
    """1 - cosine similarity, in [0, 2]."""
    if a.shape != b.shape:
        raise DimensionMismatch("feature dimensions differ")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine undefined for zero vector")
    return 1.0 - float(np.dot(a, b)) / (na * nb)


def patch_dissimilarity(a: ImageBuffer, b: ImageBuffer) -> float:
    """Mean absolute difference of the two preprocessed tensors."""
    return float(np.mean(np.abs(preprocess_crop(a) - preprocess_crop(b))))


def patch_dissimilarity_pre(ta: np.ndarray, tb: np.ndarray) -> float:
    return float(np.mean(np.abs(ta - tb)))


@dataclass
class ClassifyOutcome:
    result: Optional[MatchResult]
    pairs_evaluated: int
    pairs_failed: int


def classify_proposal(
    proposal: Proposal,
    shortlisted: Sequence[tuple[TemplateEntry, float]],
    scorer: Callable[[Proposal, TemplateEntry], float],
    metric_threshold: float,
) -> ClassifyOutcome:
    """Score the proposal against each shortlisted template and keep the
    argmin when it clears the threshold.

    Ties break by higher histogram correlation, then lower class id. A
    scorer failure skips that pair (counted) instead of aborting the image.
    """
    best: Optional[tuple[float, float, int, TemplateEntry]] = None
    evaluated = 0
    failed = 0
    for template, corr in shortlisted:
        try:
            score = float(scorer(proposal, template))
        except DataError:
            failed += 1
            continue
        evaluated += 1
        key = (score, -corr, template.class_id)
        if best is None or key < (best[0], -best[1], best[2]):
            best = (score, corr, template.class_id, template)
    if best is None or best[0] > metric_threshold:
        return ClassifyOutcome(result=None, pairs_evaluated=evaluated, pairs_failed=failed)
    return ClassifyOutcome(
        result=MatchResult(
            class_id=best[2],
            score=best[0],
            bbox=proposal.bbox,
            mask=proposal.mask,
            proposal_id=proposal.id,
        ),
        pairs_evaluated=evaluated,
        pairs_failed=failed,
    )


def nms(
    matches: Sequence[MatchResult],
    overlap_threshold: float,
    overlap_mode: str = "iou",
) -> list[MatchResult]:
    """Greedy suppression: best score first, accept a match only if its
    overlap with every accepted match stays at or below the threshold."""
    if overlap_mode == "iou":
        overlap = iou
    elif overlap_mode == "coverage":
        overlap = coverage
    else:
        raise ValueError(f"unknown overlap mode {overlap_mode!r}")
    ordered = sorted(
        matches,
        key=lambda m: (m.score, m.class_id, (m.bbox.x_min, m.bbox.y_min, m.bbox.x_max, m.bbox.y_max)),
    )
    accepted: list[MatchResult] = []
    for m in ordered:
        if all(overlap(m.bbox, a.bbox) <= overlap_threshold for a in accepted):
            accepted.append(m)
    return accepted


def sweep_threshold(
    candidates_by_image: dict[str, list[MatchResult]],
    ground_truth_by_image: dict[str, "object"],
    thresholds: Sequence[float],
    nms_overlap: float,
    overlap_mode: str = "iou",
) -> list[dict[str, float]]:
    """Precision/recall table over metric thresholds.

    Candidates are pre-threshold best matches (scores unfiltered); per
    threshold the accepted set is filtered, suppressed, matched against the
    ground truth, and reduced to metrics.
    """
    from templot import evaluation

    rows = []
    for threshold in thresholds:
        reports = []
        for image_id, candidates in sorted(candidates_by_image.items()):
            kept = [m for m in candidates if m.score <= threshold]
            dets = nms(kept, nms_overlap, overlap_mode)
            gt = ground_truth_by_image[image_id]
            reports.append(evaluation.match(dets, gt))
        merged = evaluation.merge_reports(reports)
        m = evaluation.metrics(merged)
        rows.append(
            {
                "threshold": float(threshold),
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
            }
        )
    return rows


def write_features(path: str, ids: Sequence[int], matrix: np.ndarray) -> None:
    """Binary feature file: magic TBOF, u16 version, u32 dim, u32 count,
    then count*dim little-endian f32. Sidecar <path>.json maps rows to ids."""
    from templot.core import write_json

    mat = np.ascontiguousarray(matrix, dtype="<f4")
    if mat.ndim != 2:
        raise DimensionMismatch("feature matrix must be 2-D")
    count, dim = mat.shape
    if count != len(ids):
        raise DimensionMismatch("ids length must equal row count")
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<HII", FEATURE_VERSION, dim, count))
        fh.write(mat.tobytes())
    write_json(path + ".json", {"ids": [int(i) for i in ids]})


def read_features(path: str) -> tuple[list[int], np.ndarray]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != FEATURE_MAGIC:
        raise SchemaError(f"{path}: bad magic, not a feature file")
    version, dim, count = struct.unpack_from("<HII", blob, 4)
    if version != FEATURE_VERSION:
        raise SchemaError(f"{path}: unsupported feature file version {version}")
    offset = 4 + 10
    expected = offset + 4 * dim * count
    if len(blob) != expected:
        raise SchemaError(f"{path}: expected {expected} bytes, found {len(blob)}")
    matrix = np.frombuffer(blob, dtype="<f4", offset=offset).reshape(count, dim).astype(np.float64)
    sidecar = read_json(path + ".json")
    try:
        ids = [int(i) for i in sidecar["ids"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{path}.json: bad sidecar: {exc}") from exc
    if len(ids) != count:
        raise SchemaError(f"{path}.json: {len(ids)} ids for {count} rows")
    return ids, matrix


def read_pair_scores(path: str) -> dict[tuple[int, int], float]:
    """Pair-score file from pairwise backends: {(proposal_id, class_id): score}."""
    raw = read_json(path)
    if not isinstance(raw, dict) or "pairs" not in raw or not isinstance(raw["pairs"], list):
        raise SchemaError(f"{path}: expected object with a 'pairs' list")
    table: dict[tuple[int, int], float] = {}
    for item in raw["pairs"]:
        try:
            key = (int(item["proposal_id"]), int(item["class_id"]))
            score = float(item["score"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"{path}: bad pair entry {item!r}: {exc}") from exc
        if not np.isfinite(score) or score < 0:
            raise SchemaError(f"{path}: pair score must be finite and >= 0, got {score}")
        table[key] = score
    return table
