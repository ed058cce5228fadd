"""Segment-proposal production and ingest.

Proposals arrive either from backend manifests (one JSON per image, masks
RLE-encoded) or from the oracle segmenter, which derives perturbed
proposals plus distractors from synthetic ground truth so the pipeline can
be exercised without any neural model.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

import numpy as np

from templot.core import (
    BoundingBox,
    ImageBuffer,
    SegmentMask,
    bbox_from_bitmap,
    read_json,
)
from templot.errors import DimensionMismatch, InvalidGrid, SchemaError


@dataclass(frozen=True)
class SegmenterParams:
    points_long_side: int = 64
    predicted_iou_threshold: float = 0.5
    stability_threshold: float = 0.7
    concept_confidence_threshold: float = 0.3

    def __post_init__(self) -> None:
        for name in ("predicted_iou_threshold", "stability_threshold", "concept_confidence_threshold"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0, 1], got {v}")

    def to_json(self) -> dict[str, Any]:
        return {
            "points_long_side": self.points_long_side,
            "predicted_iou_threshold": self.predicted_iou_threshold,
            "stability_threshold": self.stability_threshold,
            "concept_confidence_threshold": self.concept_confidence_threshold,
        }

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "SegmenterParams":
        try:
            return cls(
                points_long_side=int(raw.get("points_long_side", 64)),
                predicted_iou_threshold=float(raw.get("predicted_iou_threshold", 0.5)),
                stability_threshold=float(raw.get("stability_threshold", 0.7)),
                concept_confidence_threshold=float(raw.get("concept_confidence_threshold", 0.3)),
            )
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"bad segmenter params: {exc}") from exc


@dataclass(frozen=True)
class Proposal:
    id: int
    mask: SegmentMask
    bbox: BoundingBox
    crop: ImageBuffer
    source_confidence: Optional[float] = None
    # bitmap of the mask restricted to bbox; kept so the histogram stage
    # never re-decodes the full-image mask
    mask_crop: np.ndarray = field(default=None, repr=False, compare=False)  # type: ignore[assignment]

    @property
    def mask_area(self) -> int:
        return self.mask.area


def make_proposal(
    pid: int,
    image: ImageBuffer,
    bitmap: np.ndarray,
    confidence: Optional[float] = None,
    mask: Optional[SegmentMask] = None,
) -> Proposal:
    """Build a proposal from a full-image bitmap: bbox, crop, local mask."""
    box = bbox_from_bitmap(bitmap)
    local = np.ascontiguousarray(bitmap[box.y_min:box.y_max, box.x_min:box.x_max])
    return Proposal(
        id=pid,
        mask=mask if mask is not None else SegmentMask.from_bitmap(bitmap),
        bbox=box,
        crop=image.crop(box),
        source_confidence=confidence,
        mask_crop=local,
    )


def point_grid(image_width: int, image_height: int, points_long_side: int) -> list[tuple[float, float]]:
    """Uniform prompt grid: the longer dimension gets points_long_side
    points, the shorter one that count divided by the side ratio. Points sit
    at cell centers, row-major order."""
    if points_long_side < 2:
        raise InvalidGrid(f"points_long_side must be >= 2, got {points_long_side}")
    if image_width < 1 or image_height < 1:
        raise InvalidGrid("image dimensions must be >= 1")
    long_side = max(image_width, image_height)
    short_side = min(image_width, image_height)
    short_count = int(round(points_long_side / (long_side / short_side)))
    if short_count < 1:
        raise InvalidGrid(
            f"aspect ratio {long_side}/{short_side} leaves no short-side points"
        )
    nx, ny = (points_long_side, short_count) if image_width >= image_height else (short_count, points_long_side)
    xs = [(i + 0.5) * image_width / nx for i in range(nx)]
    ys = [(j + 0.5) * image_height / ny for j in range(ny)]
    return [(x, y) for y in ys for x in xs]


@dataclass(frozen=True)
class LoadedManifest:
    image_id: str
    image_path: str
    image: ImageBuffer
    segmenter: SegmenterParams
    proposals: list[Proposal]
    empty_dropped: int


def load_manifest(path: str) -> LoadedManifest:
    """Read a proposal manifest, decode masks, and build crops.

    The referenced image resolves relative to the manifest's directory.
    Empty masks are dropped and counted rather than failing the image.
    """
    raw = read_json(path)
    if not isinstance(raw, dict):
        raise SchemaError(f"{path}: manifest must be a JSON object")
    try:
        image_id = str(raw["image_id"])
        image_path = str(raw["image_path"])
        items = raw["proposals"]
    except KeyError as exc:
        raise SchemaError(f"{path}: missing manifest field {exc}") from exc
    if not isinstance(items, list):
        raise SchemaError(f"{path}: proposals must be a list")
    segmenter = SegmenterParams.from_json(raw.get("segmenter", {}))
    base = os.path.dirname(os.path.abspath(path))
    resolved = image_path if os.path.isabs(image_path) else os.path.join(base, image_path)
    image = ImageBuffer.load_png(resolved)

    proposals: list[Proposal] = []
    dropped = 0
    pid = 0
    for item in items:
        if not isinstance(item, dict) or "mask" not in item:
            raise SchemaError(f"{path}: proposal entries need a mask")
        mask = SegmentMask.from_json(item["mask"])
        if (mask.width, mask.height) != (image.width, image.height):
            raise DimensionMismatch(
                f"{path}: mask {mask.width}x{mask.height} vs image {image.width}x{image.height}"
            )
        conf = item.get("confidence")
        conf = None if conf is None else float(conf)
        bitmap = mask.to_bitmap()
        if not bitmap.any():
            dropped += 1
            continue
        proposals.append(make_proposal(pid, image, bitmap, confidence=conf, mask=mask))
        pid += 1
    return LoadedManifest(
        image_id=image_id,
        image_path=resolved,
        image=image,
        segmenter=segmenter,
        proposals=proposals,
        empty_dropped=dropped,
    )


def _morph4(bitmap: np.ndarray, grow: bool, iterations: int) -> np.ndarray:
    """4-neighbor dilation/erosion. The diamond structuring element moves
    each bbox face of a convex mask by exactly the iteration count, which
    keeps oracle perturbation inside its advertised bound (a square kernel
    over-erodes curved extremes)."""
    m = bitmap.astype(bool)
    h, w = m.shape
    for _ in range(iterations):
        p = np.zeros((h + 2, w + 2), dtype=bool)
        p[1:-1, 1:-1] = m
        neighbors = (p[:-2, 1:-1], p[2:, 1:-1], p[1:-1, :-2], p[1:-1, 2:])
        if grow:
            m = m | neighbors[0] | neighbors[1] | neighbors[2] | neighbors[3]
        else:
            m = m & neighbors[0] & neighbors[1] & neighbors[2] & neighbors[3]
    return m


def load_manifest_masks(path: str) -> tuple[str, list[SegmentMask], list[Optional[float]]]:
    """Masks and confidences only, skipping image load and crop extraction.
    Empty masks are kept (caller decides); schema checks match load_manifest."""
    raw = read_json(path)
    if not isinstance(raw, dict):
        raise SchemaError(f"{path}: manifest must be a JSON object")
    try:
        image_id = str(raw["image_id"])
        items = raw["proposals"]
    except KeyError as exc:
        raise SchemaError(f"{path}: missing manifest field {exc}") from exc
    if not isinstance(items, list):
        raise SchemaError(f"{path}: proposals must be a list")
    masks: list[SegmentMask] = []
    confs: list[Optional[float]] = []
    for item in items:
        if not isinstance(item, dict) or "mask" not in item:
            raise SchemaError(f"{path}: proposal entries need a mask")
        masks.append(SegmentMask.from_json(item["mask"]))
        conf = item.get("confidence")
        confs.append(None if conf is None else float(conf))
    return image_id, masks, confs


def write_manifest(
    path: str,
    image_id: str,
    image_path: str,
    masks: Sequence[SegmentMask],
    confidences: Optional[Sequence[Optional[float]]] = None,
    segmenter: Optional[SegmenterParams] = None,
) -> None:
    from templot.core import write_json

    if confidences is None:
        confidences = [None] * len(masks)
    doc = {
        "image_id": image_id,
        "image_path": image_path,
        "segmenter": (segmenter or SegmenterParams()).to_json(),
        "proposals": [
            {"mask": m.to_json(), "confidence": c} for m, c in zip(masks, confidences)
        ],
    }
    write_json(path, doc)


@dataclass(frozen=True)
class SceneTruth:
    """The slice of synthetic ground truth the oracle segmenter consumes."""

    image: ImageBuffer
    icon_masks: list[SegmentMask]
    text_boxes: list[BoundingBox]


def oracle_segment(
    truth: SceneTruth,
    perturbation: int,
    seed: int,
    distractor_factor: float = 2.0,
) -> list[Proposal]:
    """Model-free segmenter: one proposal per ground-truth icon with its
    mask dilated or eroded by at most `perturbation` pixels, plus seeded
    distractor proposals over pure background and over text regions.

    Deterministic for a fixed seed; perturbation 0 reproduces the ground
    truth masks bit-exactly.
    """
    rng = np.random.default_rng(seed)
    image = truth.image
    proposals: list[Proposal] = []
    pid = 0
    icon_boxes: list[BoundingBox] = []

    for mask in truth.icon_masks:
        bitmap = mask.to_bitmap()
        box = bbox_from_bitmap(bitmap)
        icon_boxes.append(box)
        if perturbation > 0:
            amount = int(rng.integers(0, perturbation + 1))
            grow = bool(rng.integers(0, 2))
            if amount > 0:
                margin = amount + 1
                y0 = max(0, box.y_min - margin)
                y1 = min(image.height, box.y_max + margin)
                x0 = max(0, box.x_min - margin)
                x1 = min(image.width, box.x_max + margin)
                window = _morph4(bitmap[y0:y1, x0:x1], grow, amount)
                if window.any():
                    bitmap = bitmap.copy()
                    bitmap[y0:y1, x0:x1] = window
        proposals.append(make_proposal(pid, image, bitmap, confidence=1.0))
        pid += 1

    n_distract = int(round(distractor_factor * len(truth.icon_masks)))
    text_cycle = list(truth.text_boxes)
    for k in range(n_distract):
        if text_cycle and k % 2 == 1:
            box = text_cycle[(k // 2) % len(text_cycle)]
            bitmap = np.zeros((image.height, image.width), dtype=bool)
            bitmap[box.y_min:box.y_max, box.x_min:box.x_max] = True
            proposals.append(make_proposal(pid, image, bitmap, confidence=0.5))
            pid += 1
            continue
        placed = False
        for _ in range(200):
            w = int(rng.integers(30, 91))
            h = int(rng.integers(30, 91))
            if image.width - w - 2 <= 1 or image.height - h - 2 <= 1:
                continue
            x0 = int(rng.integers(1, image.width - w - 1))
            y0 = int(rng.integers(1, image.height - h - 1))
            cand = BoundingBox(x0, y0, x0 + w, y0 + h)
            if any(cand.intersection_area(ib) > 0 for ib in icon_boxes):
                continue
            if any(cand.intersection_area(tb) > 0 for tb in truth.text_boxes):
                continue
            bitmap = np.zeros((image.height, image.width), dtype=bool)
            bitmap[cand.y_min:cand.y_max, cand.x_min:cand.x_max] = True
            proposals.append(make_proposal(pid, image, bitmap, confidence=0.5))
            pid += 1
            placed = True
            break
        if not placed:
            continue
    return proposals
