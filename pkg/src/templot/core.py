"""Shared geometry, mask encoding, image buffers, and pipeline configuration.

Coordinate convention: x = column, y = row, origin top-left. Boxes are
half-open (inclusive min, exclusive max) so area = (x_max - x_min) *
(y_max - y_min) with no off-by-one adjustments. All types are immutable
after construction and all operations are pure.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from templot import kernels
from templot.errors import DimensionMismatch, EmptyMask, ImageLoadError, MalformedRuns, SchemaError


@dataclass(frozen=True, order=True)
class BoundingBox:
    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self) -> None:
        if not (0 <= self.x_min < self.x_max and 0 <= self.y_min < self.y_max):
            raise ValueError(f"degenerate box {self.as_list()}")

    @property
    def width(self) -> int:
        return self.x_max - self.x_min

    @property
    def height(self) -> int:
        return self.y_max - self.y_min

    @property
    def area(self) -> int:
        return self.width * self.height

    @property
    def midpoint(self) -> tuple[float, float]:
        return ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    def contains_point(self, x: float, y: float) -> bool:
        return self.x_min <= x < self.x_max and self.y_min <= y < self.y_max

    def intersection_area(self, other: "BoundingBox") -> int:
        w = min(self.x_max, other.x_max) - max(self.x_min, other.x_min)
        h = min(self.y_max, other.y_max) - max(self.y_min, other.y_min)
        if w <= 0 or h <= 0:
            return 0
        return w * h

    def touches_border(self, width: int, height: int) -> bool:
        return self.x_min == 0 or self.y_min == 0 or self.x_max == width or self.y_max == height

    def as_list(self) -> list[int]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    @classmethod
    def from_list(cls, raw: Sequence[int]) -> "BoundingBox":
        if len(raw) != 4:
            raise SchemaError(f"bbox must have 4 entries, got {len(raw)}")
        return cls(int(raw[0]), int(raw[1]), int(raw[2]), int(raw[3]))


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; disjoint boxes give 0."""
    inter = a.intersection_area(b)
    if inter == 0:
        return 0.0
    return inter / float(a.area + b.area - inter)


def coverage(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection area over the smaller box's area."""
    inter = a.intersection_area(b)
    if inter == 0:
        return 0.0
    return inter / float(min(a.area, b.area))


@dataclass(frozen=True)
class SegmentMask:
    """Row-major RLE bitmask. Runs alternate background/foreground, starting
    with background (first run may be 0)."""

    width: int
    height: int
    runs: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise MalformedRuns(f"mask dimensions {self.width}x{self.height} invalid")
        total = 0
        for r in self.runs:
            if r < 0:
                raise MalformedRuns("negative run length")
            total += r
        if total != self.width * self.height:
            raise MalformedRuns(
                f"runs cover {total} pixels, expected {self.width * self.height}"
            )

    @classmethod
    def from_bitmap(cls, bitmap: np.ndarray) -> "SegmentMask":
        if bitmap.ndim != 2:
            raise MalformedRuns("bitmap must be 2-D")
        h, w = bitmap.shape
        runs = kernels.rle_encode(np.ascontiguousarray(bitmap, dtype=np.uint8).ravel())
        return cls(width=w, height=h, runs=tuple(int(r) for r in runs))

    def to_bitmap(self) -> np.ndarray:
        flat = kernels.rle_decode(np.asarray(self.runs, dtype=np.int64), self.width * self.height)
        return flat.reshape(self.height, self.width).astype(bool)

    @property
    def area(self) -> int:
        return sum(self.runs[1::2])

    def to_json(self) -> dict[str, Any]:
        return {"width": self.width, "height": self.height, "runs": list(self.runs)}

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "SegmentMask":
        try:
            width = int(raw["width"])
            height = int(raw["height"])
            runs = tuple(int(r) for r in raw["runs"])
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaError(f"bad mask JSON: {exc}") from exc
        return cls(width=width, height=height, runs=runs)


def bbox_from_mask(mask: SegmentMask) -> BoundingBox:
    """Tightest half-open box containing every foreground pixel."""
    return bbox_from_bitmap(mask.to_bitmap())


def bbox_from_bitmap(bitmap: np.ndarray) -> BoundingBox:
    rows = np.flatnonzero(bitmap.any(axis=1))
    if rows.size == 0:
        raise EmptyMask("mask has no foreground pixel")
    cols = np.flatnonzero(bitmap.any(axis=0))
    return BoundingBox(int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1)


class ImageBuffer:
    """8-bit RGB or RGBA raster. Pixels are (height, width, channels) and
    frozen after construction."""

    __slots__ = ("pixels",)

    def __init__(self, pixels: np.ndarray):
        arr = np.ascontiguousarray(pixels, dtype=np.uint8)
        if arr.ndim != 3 or arr.shape[2] not in (3, 4):
            raise DimensionMismatch(f"pixels must be (h, w, 3|4), got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    def __setattr__(self, name: str, value: Any) -> None:
        raise AttributeError("ImageBuffer is immutable")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    def crop(self, box: BoundingBox) -> "ImageBuffer":
        if box.x_max > self.width or box.y_max > self.height:
            raise DimensionMismatch(f"box {box.as_list()} exceeds {self.width}x{self.height}")
        return ImageBuffer(self.pixels[box.y_min:box.y_max, box.x_min:box.x_max])

    def rgb(self) -> np.ndarray:
        return self.pixels[:, :, :3]

    @classmethod
    def load_png(cls, path: str) -> "ImageBuffer":
        from PIL import Image, UnidentifiedImageError

        try:
            with Image.open(path) as im:
                if im.mode not in ("RGB", "RGBA"):
                    im = im.convert("RGBA" if "A" in im.mode or im.mode == "P" else "RGB")
                return cls(np.asarray(im))
        except (FileNotFoundError, OSError, UnidentifiedImageError) as exc:
            raise ImageLoadError(f"cannot load image {path}: {exc}") from exc

    def save_png(self, path: str) -> None:
        from PIL import Image

        Image.fromarray(self.pixels).save(path, format="PNG", compress_level=1)


@dataclass(frozen=True)
class PipelineConfig:
    """Tunable stage parameters with their operating defaults.

    metric_threshold follows the similarity-metric convention of the mode it
    configures: a dissimilarity ceiling in perceptual mode (default 0.7), a
    similarity floor in embedding mode (default 0.85, converted to the
    internal lower-is-better score as 1 - value).
    """

    correlation_threshold: float = 0.5
    shortlist_factor: float = 0.9
    metric_threshold: Optional[float] = None
    nms_overlap: float = 0.10
    area_ratio_bounds: tuple[float, float] = (0.25, 2.0)
    histogram_bins_per_channel: int = 8
    grid_points_long_side: int = 64
    masked_histograms: bool = True
    overlap_mode: str = "iou"

    def __post_init__(self) -> None:
        if not (0 < self.shortlist_factor <= 1):
            raise ValueError("shortlist_factor must be in (0, 1]")
        if not (0 < self.nms_overlap < 1):
            raise ValueError("nms_overlap must be in (0, 1)")
        low, high = self.area_ratio_bounds
        if not (low < high):
            raise ValueError("area_ratio_bounds must satisfy low < high")
        if not (-1.0 <= self.correlation_threshold <= 1.0):
            raise ValueError("correlation_threshold must be in [-1, 1]")
        if self.histogram_bins_per_channel < 1:
            raise ValueError("histogram_bins_per_channel must be >= 1")
        if self.overlap_mode not in ("iou", "coverage"):
            raise ValueError("overlap_mode must be iou or coverage")

    def resolved_metric_threshold(self, metric_mode: str) -> float:
        """Internal lower-is-better dissimilarity ceiling for a metric mode."""
        if self.metric_threshold is None:
            raw = 0.7 if metric_mode == "perceptual" else 0.85
        else:
            raw = self.metric_threshold
        if raw == float("inf"):  # sweep sentinel: accept everything
            return raw
        if metric_mode == "embedding":
            return 1.0 - raw
        return raw

    def to_json(self) -> dict[str, Any]:
        d = dataclasses.asdict(self)
        d["area_ratio_bounds"] = list(self.area_ratio_bounds)
        return d

    @classmethod
    def from_json(cls, raw: dict[str, Any]) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise SchemaError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(raw)
        if "area_ratio_bounds" in kwargs:
            kwargs["area_ratio_bounds"] = tuple(kwargs["area_ratio_bounds"])
        return cls(**kwargs)


def write_json(path: str, obj: Any) -> None:
    """Canonical JSON writer: sorted keys, fixed layout, trailing newline."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON in {path}: {exc}") from exc
