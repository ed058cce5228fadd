"""Annotated output images: detection boxes, class labels, failure marks."""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from templot.core import BoundingBox, ImageBuffer
from templot.synth import _glyph_bitmap

GREEN = (20, 160, 40)
RED = (220, 30, 30)
BLUE = (30, 60, 200)


def draw_box(canvas: np.ndarray, box: BoundingBox, color: tuple[int, int, int], thickness: int = 2) -> None:
    h, w = canvas.shape[:2]
    x0, y0 = max(0, box.x_min), max(0, box.y_min)
    x1, y1 = min(w, box.x_max), min(h, box.y_max)
    t = thickness
    canvas[y0:min(y0 + t, y1), x0:x1] = color
    canvas[max(y1 - t, y0):y1, x0:x1] = color
    canvas[y0:y1, x0:min(x0 + t, x1)] = color
    canvas[y0:y1, max(x1 - t, x0):x1] = color


def draw_label(canvas: np.ndarray, text: str, x: int, y: int, color: tuple[int, int, int]) -> None:
    glyph = _glyph_bitmap(text.upper(), 1)
    gh, gw = glyph.shape
    h, w = canvas.shape[:2]
    y0 = max(0, min(y, h - gh))
    x0 = max(0, min(x, w - gw))
    window = canvas[y0:y0 + gh, x0:x0 + gw]
    sub = glyph[: window.shape[0], : window.shape[1]]
    window[sub] = color


def annotate_detections(
    image: ImageBuffer,
    detections: Sequence,
    names_by_class: Optional[dict[int, str]] = None,
    failures: Sequence[BoundingBox] = (),
) -> ImageBuffer:
    """Green boxes with class labels and scores; failure boxes in red."""
    canvas = image.pixels[:, :, :3].copy()
    for det in detections:
        draw_box(canvas, det.bbox, GREEN)
        name = (names_by_class or {}).get(det.class_id, str(det.class_id))
        draw_label(canvas, f"{name} {det.score:.2f}", det.bbox.x_min, det.bbox.y_min - 9, GREEN)
    for box in failures:
        draw_box(canvas, box, RED, thickness=3)
    return ImageBuffer(canvas)
