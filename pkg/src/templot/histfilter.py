"""Color-histogram proposal filtering.

The cheap first stage: joint RGB histograms are compared by Pearson
correlation, proposals without a template above the correlation threshold
are withdrawn, and the surviving templates within 90% of the best
correlation form the shortlist handed to the metric stage. A size
prefilter rejects proposals far off every template's pixel area.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from templot import kernels
from templot.core import ImageBuffer, read_json
from templot.errors import DimensionMismatch, EmptyRegion, SchemaError, ZeroVariance


@dataclass(frozen=True)
class ColorHistogram:
    bins_per_channel: int
    counts: np.ndarray  # int64, length bins_per_channel ** 3

    def __post_init__(self) -> None:
        expected = self.bins_per_channel ** 3
        if self.counts.shape != (expected,):
            raise DimensionMismatch(f"histogram needs {expected} bins, got {self.counts.shape}")

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class TemplateEntry:
    class_id: int
    name: str
    image: ImageBuffer  # RGBA
    histogram: ColorHistogram
    pixel_area: int  # count of alpha > 0 pixels


def compute_histogram(
    crop: ImageBuffer,
    mask: Optional[np.ndarray] = None,
    bins_per_channel: int = 8,
) -> ColorHistogram:
    """Histogram over the masked pixels of a crop.

    mask is a boolean array matching the crop; when omitted, RGBA crops use
    alpha > 0 and RGB crops use every pixel.
    """
    pixels = crop.pixels
    if mask is None and crop.channels == 4:
        mask = pixels[:, :, 3] > 0
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (crop.height, crop.width):
            raise DimensionMismatch(
                f"mask {mask.shape} does not cover crop {(crop.height, crop.width)}"
            )
        selected = pixels[:, :, :3][mask]
    else:
        selected = pixels[:, :, :3].reshape(-1, 3)
    if selected.shape[0] == 0:
        raise EmptyRegion("no pixels contribute to histogram")
    counts = kernels.joint_hist(np.ascontiguousarray(selected), bins_per_channel)
    return ColorHistogram(bins_per_channel=bins_per_channel, counts=counts)


def histogram_correlation(a: ColorHistogram, b: ColorHistogram) -> float:
    """Pearson correlation of the two bin-count vectors."""
    if a.counts.shape != b.counts.shape:
        raise DimensionMismatch("histograms have different bin counts")
    av = a.counts.astype(np.float64)
    bv = b.counts.astype(np.float64)
    ad = av - av.mean()
    bd = bv - bv.mean()
    va = float(np.dot(ad, ad))
    vb = float(np.dot(bd, bd))
    if va == 0.0 or vb == 0.0:
        raise ZeroVariance("histogram constant across bins")
    return float(np.dot(ad, bd)) / math.sqrt(va * vb)


def correlation_or_zero(a: ColorHistogram, b: ColorHistogram) -> float:
    """Degenerate comparisons (constant histogram) score 0 instead of raising."""
    try:
        return histogram_correlation(a, b)
    except ZeroVariance:
        return 0.0


def area_prefilter(
    mask_area: int,
    templates: Sequence[TemplateEntry],
    bounds: tuple[float, float],
) -> bool:
    """Keep a proposal iff some template's pixel area is within the ratio bounds."""
    low, high = bounds
    for t in templates:
        ratio = mask_area / t.pixel_area
        if low <= ratio <= high:
            return True
    return False


def shortlist(
    proposal_hist: ColorHistogram,
    templates: Sequence[TemplateEntry],
    correlation_threshold: float,
    shortlist_factor: float,
) -> list[tuple[TemplateEntry, float]]:
    """Templates within shortlist_factor of the best correlation.

    Returns [] when the best correlation is below the threshold (the
    proposal is withdrawn). Result is sorted by descending correlation,
    class id breaking exact ties.
    """
    scored = [(t, correlation_or_zero(proposal_hist, t.histogram)) for t in templates]
    best = max(c for _, c in scored)
    if best < correlation_threshold:
        return []
    cutoff = shortlist_factor * best
    kept = [(t, c) for t, c in scored if c >= cutoff]
    kept.sort(key=lambda tc: (-tc[1], tc[0].class_id))
    return kept


def load_templates(index_path: str, bins_per_channel: int = 8) -> list[TemplateEntry]:
    """Read a template set: JSON index [{class_id, name, file}] plus PNGs.

    Files resolve relative to the index. Histograms are always recomputed
    from the images, never persisted.
    """
    raw = read_json(index_path)
    if not isinstance(raw, list):
        raise SchemaError(f"template index {index_path} must be a JSON list")
    base = os.path.dirname(os.path.abspath(index_path))
    entries = []
    for item in raw:
        try:
            class_id = int(item["class_id"])
            name = str(item["name"])
            fname = str(item["file"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad template index entry {item!r}: {exc}") from exc
        path = fname if os.path.isabs(fname) else os.path.join(base, fname)
        image = ImageBuffer.load_png(path)
        if image.channels != 4:
            rgba = np.dstack([image.pixels, np.full((image.height, image.width), 255, np.uint8)])
            image = ImageBuffer(rgba)
        alpha = image.pixels[:, :, 3] > 0
        area = int(alpha.sum())
        if area < 1:
            raise SchemaError(f"template {name} has no opaque pixel")
        hist = compute_histogram(image, mask=alpha, bins_per_channel=bins_per_channel)
        entries.append(
            TemplateEntry(class_id=class_id, name=name, image=image, histogram=hist, pixel_area=area)
        )
    if not entries:
        raise SchemaError(f"template index {index_path} is empty")
    entries.sort(key=lambda t: t.class_id)
    return entries
