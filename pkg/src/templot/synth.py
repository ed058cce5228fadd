"""Deterministic synthetic map-scene generator.

Produces the desk-scale stand-in for real navigation-map datasets: smooth
multi-region backgrounds with polyline roads, procedurally drawn icon
templates pasted at seeded positions and sizes, optional text overlays in
a single font color with a known ground-truth text mask, and every
annotation needed to drive the detection pipeline and its evaluation
without any external model or data.
"""

from __future__ import annotations

import colorsys
import math
import os
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence

import numpy as np

from templot.core import (
    BoundingBox,
    ImageBuffer,
    SegmentMask,
    bbox_from_bitmap,
    write_json,
)
from templot.errors import PlacementFailure
from templot.evaluation import GroundTruthAnnotation, GroundTruthEntry
from templot.proposals import SegmenterParams, write_manifest
from templot.textremoval import OcrBox, ocr_boxes_to_json

# 5x7 bitmap font; enough glyphs for seeded map labels
_FONT = {
    "A": (".###.", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "B": ("####.", "#...#", "#...#", "####.", "#...#", "#...#", "####."),
    "C": (".###.", "#...#", "#....", "#....", "#....", "#...#", ".###."),
    "D": ("####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."),
    "E": ("#####", "#....", "#....", "####.", "#....", "#....", "#####"),
    "F": ("#####", "#....", "#....", "####.", "#....", "#....", "#...."),
    "G": (".###.", "#...#", "#....", "#.###", "#...#", "#...#", ".###."),
    "H": ("#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "I": (".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "K": ("#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"),
    "L": ("#....", "#....", "#....", "#....", "#....", "#....", "#####"),
    "M": ("#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"),
    "N": ("#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#", "#...#"),
    "O": (".###.", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),
    "P": ("####.", "#...#", "#...#", "####.", "#....", "#....", "#...."),
    "R": ("####.", "#...#", "#...#", "####.", "#.#..", "#..#.", "#...#"),
    "S": (".####", "#....", "#....", ".###.", "....#", "....#", "####."),
    "T": ("#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."),
    "U": ("#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),
    "V": ("#...#", "#...#", "#...#", "#...#", "#...#", ".#.#.", "..#.."),
    "W": ("#...#", "#...#", "#...#", "#.#.#", "#.#.#", "##.##", "#...#"),
    "X": ("#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"),
    "Z": ("#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"),
    "0": (".###.", "#...#", "#..##", "#.#.#", "##..#", "#...#", ".###."),
    "1": ("..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "2": (".###.", "#...#", "....#", "..##.", ".#...", "#....", "#####"),
    "3": (".###.", "#...#", "....#", "..##.", "....#", "#...#", ".###."),
    "5": ("#####", "#....", "####.", "....#", "....#", "#...#", ".###."),
    "7": ("#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."),
    "8": (".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."),
}
_ALPHABET = "".join(sorted(_FONT))

_ROTATIONS_DEG = (0.0, 30.0, -30.0)

# sampled icon area ratios keep a margin inside the size-prefilter bounds so
# rasterization rounding and mask perturbation of a few pixels can never
# push an oracle icon past the prefilter
_SAFE_AREA_RATIO = (0.5, 1.55)


@dataclass(frozen=True)
class SceneSpec:
    width: int = 1800
    height: int = 697
    class_count: int = 20
    icons_min: int = 8
    icons_max: int = 14
    scale_range: tuple[float, float] = (0.5, 2.0)  # icon area / template area
    text_density: float = 0.0  # fraction of icons overlaid with text
    heavy_text_fraction: float = 0.6  # of overlaid icons, drawn to high coverage
    font_color: tuple[int, int, int] = (255, 255, 255)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.class_count < 2 or self.class_count > 85:
            raise ValueError("class_count must be in [2, 85]")
        if not (0 <= self.text_density <= 1):
            raise ValueError("text_density must be in [0, 1]")
        lo, hi = self.scale_range
        if not (0.25 <= lo < hi <= 2.0):
            raise ValueError("scale_range must lie inside the size-prefilter bounds (0.25, 2.0)")
        if self.icons_min < 1 or self.icons_max < self.icons_min:
            raise ValueError("bad icons_min/icons_max")

    def to_json(self) -> dict[str, Any]:
        return {
            "width": self.width,
            "height": self.height,
            "class_count": self.class_count,
            "icons_min": self.icons_min,
            "icons_max": self.icons_max,
            "scale_range": list(self.scale_range),
            "text_density": self.text_density,
            "heavy_text_fraction": self.heavy_text_fraction,
            "font_color": list(self.font_color),
            "seed": self.seed,
        }


@dataclass(frozen=True)
class SceneBundle:
    image_id: str
    image: ImageBuffer
    annotations: GroundTruthAnnotation
    icon_masks: list[SegmentMask]
    text_mask: SegmentMask
    ocr_boxes: list[OcrBox]
    font_color: tuple[int, int, int]
    # pixels drawn with full font ink (no anti-alias blend); superset check
    # target for the color-based text mask
    pure_text_mask: SegmentMask = field(repr=False, default=None)  # type: ignore[assignment]


# --------------------------------------------------------------------------
# Templates
# --------------------------------------------------------------------------

_SHAPES = ("circle", "rounded", "diamond", "square")


def _silhouette(shape: str, size: int) -> np.ndarray:
    # every silhouette touches the canvas on all four sides, so a tight
    # bbox crop of a pasted icon frames the same content as the template
    c = (size - 1) / 2.0
    yy, xx = np.mgrid[0:size, 0:size]
    if shape == "circle":
        r = (size - 1) / 2.0
        return (xx - c) ** 2 + (yy - c) ** 2 <= r * r + 0.5
    if shape == "diamond":
        r = (size - 1) / 2.0
        return np.abs(xx - c) + np.abs(yy - c) <= r + 0.5
    if shape == "rounded":
        r = size * 0.2
        box = np.ones((size, size), dtype=bool)
        cx0, cy0, cx1, cy1 = r, r, size - 1 - r, size - 1 - r
        corner = np.zeros_like(box)
        for cy, cx in ((cy0, cx0), (cy0, cx1), (cy1, cx0), (cy1, cx1)):
            quadrant = ((xx - cx) ** 2 + (yy - cy) ** 2 > r * r)
            side_x = (xx < cx0) | (xx > cx1)
            side_y = (yy < cy0) | (yy > cy1)
            corner |= quadrant & side_x & side_y
        return box & ~corner
    return np.ones((size, size), dtype=bool)


def _class_colors(class_count: int, rng: np.random.Generator) -> list[tuple[int, int, int]]:
    # bright, saturated bases: far from pastel backgrounds and road grays in
    # normalized space, so background segments never resemble a template
    colors = []
    for i in range(class_count):
        hue = (i / class_count + float(rng.uniform(0, 0.5 / class_count))) % 1.0
        sat = 0.82 + float(rng.uniform(0, 0.13))
        val = 0.72 + 0.16 * (i % 2)
        r, g, b = colorsys.hsv_to_rgb(hue, sat, val)
        colors.append((int(round(r * 255)), int(round(g * 255)), int(round(b * 255))))
    return colors


def _draw_template(class_id: int, size: int, color: tuple[int, int, int], glyph_seed: int) -> ImageBuffer:
    rng = np.random.default_rng(glyph_seed)
    shape = _SHAPES[class_id % len(_SHAPES)]
    sil = _silhouette(shape, size)
    rgba = np.zeros((size, size, 4), dtype=np.uint8)
    rgba[:, :, :3][sil] = color
    rgba[:, :, 3][sil] = 255

    # mirrored 5x5 glyph pattern in a darker shade of the base color; soft
    # contrast keeps resampling misalignment cheap under mask perturbation
    half = rng.random((5, 3)) < 0.55
    pattern = np.hstack([half, half[:, 1::-1]])[:, :5]
    cell = max(2, int(size * 0.6) // 5)
    g0 = (size - cell * 5) // 2
    ink = np.array([int(round(c * 0.35)) for c in color], dtype=np.uint8)
    for gy in range(5):
        for gx in range(5):
            if not pattern[gy, gx]:
                continue
            ys = slice(g0 + gy * cell, g0 + (gy + 1) * cell)
            xs = slice(g0 + gx * cell, g0 + (gx + 1) * cell)
            block = sil[ys, xs]
            rgba[ys, xs, :3][block] = ink
    return ImageBuffer(rgba)


@dataclass(frozen=True)
class TemplateImage:
    class_id: int
    name: str
    image: ImageBuffer


def generate_templates(class_count: int, size: int = 48, seed: int = 0) -> list[TemplateImage]:
    """Procedural per-class RGBA icons: distinct base color and glyph per
    class, regenerated until every pair is at least 0.05 apart under the
    built-in embedding dissimilarity."""
    from templot.classify import embedding_dissimilarity, reference_extract

    if class_count < 2:
        raise ValueError("class_count must be >= 2")
    rng = np.random.default_rng(seed)
    colors = _class_colors(class_count, rng)
    templates: list[TemplateImage] = []
    features: list[np.ndarray] = []
    for class_id in range(class_count):
        for attempt in range(32):
            glyph_seed = int(rng.integers(0, 2 ** 31))
            image = _draw_template(class_id, size, colors[class_id], glyph_seed)
            feat = reference_extract(image)
            if all(embedding_dissimilarity(feat, f) >= 0.05 for f in features):
                break
        else:
            raise PlacementFailure(f"could not draw a distinct template for class {class_id}")
        templates.append(TemplateImage(class_id=class_id, name=f"icon_{class_id:02d}", image=image))
        features.append(feat)
    return templates


def write_templates(out_dir: str, templates: Sequence[TemplateImage]) -> str:
    os.makedirs(out_dir, exist_ok=True)
    index = []
    for t in templates:
        fname = f"{t.name}.png"
        t.image.save_png(os.path.join(out_dir, fname))
        index.append({"class_id": t.class_id, "name": t.name, "file": fname})
    index_path = os.path.join(out_dir, "index.json")
    write_json(index_path, index)
    return index_path


# --------------------------------------------------------------------------
# Text rendering
# --------------------------------------------------------------------------

def _glyph_bitmap(text: str, px: int) -> np.ndarray:
    cols = []
    for ch in text:
        rows = _FONT.get(ch)
        if rows is None:
            rows = ("....." for _ in range(7))
        g = np.array([[c == "#" for c in row] for row in rows], dtype=bool)
        cols.append(g)
        cols.append(np.zeros((7, 1), dtype=bool))
    joined = np.hstack(cols[:-1]) if cols else np.zeros((7, 1), dtype=bool)
    return np.kron(joined, np.ones((px, px), dtype=bool))


def _rotate_coverage(src: np.ndarray, degrees: float) -> np.ndarray:
    """Coverage fractions of the rotated glyph bitmap, 4x4 supersampled."""
    if degrees == 0.0:
        return src.astype(np.float64)
    rad = math.radians(degrees)
    cos, sin = math.cos(rad), math.sin(rad)
    hs, ws = src.shape
    out_w = int(math.ceil(abs(ws * cos) + abs(hs * sin)))
    out_h = int(math.ceil(abs(ws * sin) + abs(hs * cos)))
    sub = 4
    ys = (np.arange(out_h * sub) + 0.5) / sub - out_h / 2.0
    xs = (np.arange(out_w * sub) + 0.5) / sub - out_w / 2.0
    gy, gx = np.meshgrid(ys, xs, indexing="ij")
    # inverse rotation into source frame
    sx = cos * gx + sin * gy + ws / 2.0
    sy = -sin * gx + cos * gy + hs / 2.0
    ix = np.floor(sx).astype(np.intp)
    iy = np.floor(sy).astype(np.intp)
    valid = (ix >= 0) & (ix < ws) & (iy >= 0) & (iy < hs)
    hits = np.zeros(gx.shape, dtype=np.float64)
    hits[valid] = src[iy[valid], ix[valid]]
    return hits.reshape(out_h, sub, out_w, sub).mean(axis=(1, 3))


def _blend_text(
    canvas: np.ndarray,
    text_cov: np.ndarray,
    pure: np.ndarray,
    coverage: np.ndarray,
    x0: int,
    y0: int,
    font_color: tuple[int, int, int],
) -> Optional[BoundingBox]:
    h, w = canvas.shape[:2]
    ch, cw = coverage.shape
    sy0, sx0 = max(0, -y0), max(0, -x0)
    ty0, tx0 = max(0, y0), max(0, x0)
    ty1, tx1 = min(h, y0 + ch), min(w, x0 + cw)
    if ty1 <= ty0 or tx1 <= tx0:
        return None
    cov = coverage[sy0:sy0 + (ty1 - ty0), sx0:sx0 + (tx1 - tx0)]
    if cov.max() <= 0:
        return None
    window = canvas[ty0:ty1, tx0:tx1].astype(np.float64)
    fc = np.asarray(font_color, dtype=np.float64)
    blended = window * (1.0 - cov[:, :, None]) + fc * cov[:, :, None]
    canvas[ty0:ty1, tx0:tx1] = np.rint(blended).astype(np.uint8)
    text_cov[ty0:ty1, tx0:tx1] |= cov >= 0.5
    pure[ty0:ty1, tx0:tx1] |= cov >= 1.0
    ys, xs = np.nonzero(cov > 0)
    return BoundingBox(
        int(tx0 + xs.min()), int(ty0 + ys.min()), int(tx0 + xs.max()) + 1, int(ty0 + ys.max()) + 1
    )


def _random_word(rng: np.random.Generator) -> str:
    length = int(rng.integers(4, 9))
    return "".join(_ALPHABET[int(rng.integers(0, len(_ALPHABET)))] for _ in range(length))


# --------------------------------------------------------------------------
# Scene assembly
# --------------------------------------------------------------------------

def _low_sat_color(rng: np.random.Generator, lo: float, hi: float) -> np.ndarray:
    # near-neutral map tones: correlated channels, small jitter, so no
    # background region drifts toward a desaturated template hue
    base = float(rng.uniform(lo, hi))
    return np.clip(base + rng.uniform(-12, 12, size=3), 0, 255)


def _background(spec: SceneSpec, rng: np.random.Generator) -> np.ndarray:
    h, w = spec.height, spec.width
    c1 = _low_sat_color(rng, 160, 200)
    c2 = _low_sat_color(rng, 160, 200)
    ty = (np.arange(h, dtype=np.float64) / max(h - 1, 1))[:, None, None]
    canvas = c1 * (1 - ty) + c2 * ty
    yy = np.arange(h, dtype=np.float64)[:, None]
    xx = np.arange(w, dtype=np.float64)[None, :]
    for _ in range(4):
        cx = float(rng.uniform(0, w))
        cy = float(rng.uniform(0, h))
        rx = float(rng.uniform(w * 0.15, w * 0.45))
        ry = float(rng.uniform(h * 0.2, h * 0.6))
        tint = _low_sat_color(rng, 150, 205)
        q = ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2
        weight = np.clip(1.0 - q, 0.0, 1.0)[:, :, None] * 0.5
        canvas = canvas * (1 - weight) + tint * weight

    road = rng.uniform(95, 125, size=3)
    for _ in range(int(rng.integers(2, 5))):
        n_pts = int(rng.integers(3, 6))
        px = rng.uniform(0, w, size=n_pts)
        py = rng.uniform(0, h, size=n_pts)
        width_px = int(rng.integers(3, 7))
        for i in range(n_pts - 1):
            length = math.hypot(px[i + 1] - px[i], py[i + 1] - py[i])
            steps = max(int(length / 2), 1)
            ts = np.linspace(0, 1, steps)
            for t in ts:
                x = px[i] + (px[i + 1] - px[i]) * t
                y = py[i] + (py[i + 1] - py[i]) * t
                x0, x1 = max(0, int(x) - width_px), min(w, int(x) + width_px + 1)
                y0, y1 = max(0, int(y) - width_px), min(h, int(y) + width_px + 1)
                if x1 > x0 and y1 > y0:
                    canvas[y0:y1, x0:x1] = road
    return np.rint(canvas).astype(np.uint8)


def _nn_scale_rgba(rgba: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    sh, sw = rgba.shape[:2]
    iy = np.minimum(((np.arange(out_h) + 0.5) * sh / out_h).astype(np.intp), sh - 1)
    ix = np.minimum(((np.arange(out_w) + 0.5) * sw / out_w).astype(np.intp), sw - 1)
    return rgba[iy][:, ix]


def _dominant_color(image: ImageBuffer) -> np.ndarray:
    rgba = image.pixels
    opaque = rgba[:, :, 3] > 0
    colors, counts = np.unique(rgba[:, :, :3][opaque].reshape(-1, 3), axis=0, return_counts=True)
    return colors[int(np.argmax(counts))].astype(np.float64)


_PLACEMENT_GAP = 12
_BORDER_MARGIN = 6


def generate_scene(spec: SceneSpec, templates: Sequence[TemplateImage], image_id: str = "scene") -> SceneBundle:
    """Render one deterministic scene bundle for (spec, templates).

    Ground-truth icons never overlap and never touch the border; the text
    mask records pixels with at least half font ink.
    """
    for t in templates:
        dom = _dominant_color(t.image)
        dist = float(np.linalg.norm(dom - np.asarray(spec.font_color, dtype=np.float64)))
        if dist < 60:
            raise ValueError(
                f"font color {spec.font_color} too close to template {t.name} dominant color"
            )
    rng = np.random.default_rng(spec.seed)
    canvas = _background(spec, rng)
    h, w = spec.height, spec.width

    n_icons = int(rng.integers(spec.icons_min, spec.icons_max + 1))
    lo = max(spec.scale_range[0], _SAFE_AREA_RATIO[0])
    hi = min(spec.scale_range[1], _SAFE_AREA_RATIO[1])
    placed_boxes: list[BoundingBox] = []
    entries: list[GroundTruthEntry] = []
    icon_masks: list[SegmentMask] = []

    for _ in range(n_icons):
        template = templates[int(rng.integers(0, len(templates)))]
        area_ratio = float(rng.uniform(lo, hi))
        lin = math.sqrt(area_ratio)
        th, tw = template.image.height, template.image.width
        oh, ow = max(8, int(round(th * lin))), max(8, int(round(tw * lin)))
        scaled = _nn_scale_rgba(template.image.pixels, oh, ow)
        alpha = scaled[:, :, 3] > 0
        placed = False
        for _attempt in range(1000):
            x0 = int(rng.integers(_BORDER_MARGIN, w - ow - _BORDER_MARGIN))
            y0 = int(rng.integers(_BORDER_MARGIN, h - oh - _BORDER_MARGIN))
            cand = BoundingBox(
                max(0, x0 - _PLACEMENT_GAP),
                max(0, y0 - _PLACEMENT_GAP),
                min(w, x0 + ow + _PLACEMENT_GAP),
                min(h, y0 + oh + _PLACEMENT_GAP),
            )
            if any(cand.intersection_area(b) > 0 for b in placed_boxes):
                continue
            placed = True
            break
        if not placed:
            raise PlacementFailure(f"cannot place {n_icons} icons in {w}x{h}")
        canvas[y0:y0 + oh, x0:x0 + ow][alpha] = scaled[:, :, :3][alpha]
        bitmap = np.zeros((h, w), dtype=bool)
        bitmap[y0:y0 + oh, x0:x0 + ow] = alpha
        mask = SegmentMask.from_bitmap(bitmap)
        box = bbox_from_bitmap(bitmap)
        placed_boxes.append(BoundingBox(x0, y0, x0 + ow, y0 + oh))
        entries.append(GroundTruthEntry(class_id=template.class_id, bbox=box, mask=mask))
        icon_masks.append(mask)

    text_cov = np.zeros((h, w), dtype=bool)
    pure = np.zeros((h, w), dtype=bool)
    ocr_boxes: list[OcrBox] = []

    n_overlaid = int(round(spec.text_density * n_icons))
    overlay_ids = list(rng.permutation(n_icons)[:n_overlaid])
    for idx in overlay_ids:
        box = entries[idx].bbox
        heavy = bool(rng.random() < spec.heavy_text_fraction)
        target_cov = 0.52 if heavy else 0.12
        lines = 3 if heavy else 1
        px = max(1, int(round(box.height * (0.36 if heavy else 0.18) / 7)))
        angle = float(_ROTATIONS_DEG[int(rng.integers(0, len(_ROTATIONS_DEG)))])
        drawn: list[BoundingBox] = []
        for line in range(6 if heavy else 4):
            word = _random_word(rng)
            glyph = _glyph_bitmap(word, px)
            cov = _rotate_coverage(glyph, angle)
            gy = box.y_min + int(round((line + 0.5) * box.height / (lines + 0.5))) - cov.shape[0] // 2
            gx = box.x_min + (box.width - cov.shape[1]) // 2 + int(rng.integers(-4, 5))
            b = _blend_text(canvas, text_cov, pure, cov, gx, gy, spec.font_color)
            if b is not None:
                drawn.append(b)
            covered = float(text_cov[box.y_min:box.y_max, box.x_min:box.x_max].sum()) / box.area
            if line + 1 >= lines and covered >= target_cov:
                break
        if drawn:
            union = BoundingBox(
                min(b.x_min for b in drawn),
                min(b.y_min for b in drawn),
                max(b.x_max for b in drawn),
                max(b.y_max for b in drawn),
            )
            ocr_boxes.append(OcrBox(bbox=union, confidence=0.9))

    n_labels = int(round(spec.text_density * 4))
    for _ in range(n_labels):
        word = _random_word(rng)
        px = int(rng.integers(2, 4))
        angle = float(_ROTATIONS_DEG[int(rng.integers(0, len(_ROTATIONS_DEG)))])
        glyph = _glyph_bitmap(word, px)
        cov = _rotate_coverage(glyph, angle)
        ch, cw = cov.shape
        for _attempt in range(200):
            x0 = int(rng.integers(1, max(2, w - cw - 1)))
            y0 = int(rng.integers(1, max(2, h - ch - 1)))
            cand = BoundingBox(x0, y0, min(w, x0 + cw), min(h, y0 + ch))
            if any(cand.intersection_area(b) > 0 for b in placed_boxes):
                continue
            b = _blend_text(canvas, text_cov, pure, cov, x0, y0, spec.font_color)
            if b is not None:
                ocr_boxes.append(OcrBox(bbox=b, confidence=0.9))
            break

    return SceneBundle(
        image_id=image_id,
        image=ImageBuffer(canvas),
        annotations=GroundTruthAnnotation(image_id=image_id, entries=entries),
        icon_masks=icon_masks,
        text_mask=SegmentMask.from_bitmap(text_cov),
        ocr_boxes=ocr_boxes,
        font_color=spec.font_color,
        pure_text_mask=SegmentMask.from_bitmap(pure),
    )


# --------------------------------------------------------------------------
# Dataset directory
# --------------------------------------------------------------------------

def write_dataset(
    out_dir: str,
    spec: SceneSpec,
    image_count: int,
    template_size: int = 48,
) -> dict[str, Any]:
    """Write a self-contained dataset: images, annotations, ground-truth
    masks in proposal-manifest form, text masks, OCR boxes, templates, and
    a manifest recording the spec and seed."""
    os.makedirs(out_dir, exist_ok=True)
    for sub in ("images", "annotations", "masks", "textmasks", "ocr"):
        os.makedirs(os.path.join(out_dir, sub), exist_ok=True)
    templates = generate_templates(spec.class_count, size=template_size, seed=spec.seed)
    write_templates(os.path.join(out_dir, "templates"), templates)

    image_ids = []
    for i in range(image_count):
        image_id = f"scene_{i:04d}"
        bundle = generate_scene(replace(spec, seed=spec.seed + i), templates, image_id=image_id)
        bundle.image.save_png(os.path.join(out_dir, "images", f"{image_id}.png"))
        write_json(
            os.path.join(out_dir, "annotations", f"{image_id}.json"),
            bundle.annotations.to_json(),
        )
        write_manifest(
            os.path.join(out_dir, "masks", f"{image_id}.json"),
            image_id=image_id,
            image_path=os.path.join("..", "images", f"{image_id}.png"),
            masks=bundle.icon_masks,
            confidences=[1.0] * len(bundle.icon_masks),
            segmenter=SegmenterParams(),
        )
        write_json(
            os.path.join(out_dir, "textmasks", f"{image_id}.json"),
            bundle.text_mask.to_json(),
        )
        write_json(
            os.path.join(out_dir, "ocr", f"{image_id}.json"),
            ocr_boxes_to_json(bundle.ocr_boxes),
        )
        image_ids.append(image_id)

    manifest = {
        "spec": spec.to_json(),
        "image_count": image_count,
        "image_ids": image_ids,
        "template_size": template_size,
    }
    write_json(os.path.join(out_dir, "manifest.json"), manifest)
    return manifest
