"""Model-free engines used when no neural runtime is installed.

They keep the adapter contracts exercisable in CI: classical color-region
segmentation, pooled-color embeddings, a normalized patch distance, bright
low-saturation text detection, and neighbor-average inpainting.
"""

from __future__ import annotations


import numpy as np
from scipy import ndimage

IMAGENET_MEAN = np.array([0.485, 0.456, 0.406])
IMAGENET_STD = np.array([0.229, 0.224, 0.225])


def segment_regions(
    rgb: np.ndarray,
    predicted_iou_threshold: float = 0.5,
    stability_threshold: float = 0.7,
    quant: int = 24,
    min_area: int = 24,
) -> list[tuple[np.ndarray, float]]:
    """Flat-color connected components with quality scores.

    Score one: bbox fill ratio (compact blobs score high). Score two: color
    flatness inside the component. Both thresholds filter monotonically, so
    lowering them can only add proposals.
    """
    h, w = rgb.shape[:2]
    keys = (rgb.astype(np.int32) // quant)
    flat_key = (keys[:, :, 0] * 64 + keys[:, :, 1]) * 64 + keys[:, :, 2]
    out: list[tuple[np.ndarray, float]] = []
    max_area = int(0.25 * h * w)
    for key in np.unique(flat_key):
        region = flat_key == key
        if int(region.sum()) < min_area:
            continue
        labels, count = ndimage.label(region)
        for idx in range(1, count + 1):
            mask = labels == idx
            area = int(mask.sum())
            if area < min_area or area > max_area:
                continue
            ys, xs = np.nonzero(mask)
            bbox_area = (ys.max() - ys.min() + 1) * (xs.max() - xs.min() + 1)
            fill_ratio = area / bbox_area
            px = rgb[mask].astype(np.float64)
            flatness = 1.0 - min(float(px.std(axis=0).mean()) / 64.0, 1.0)
            if fill_ratio >= predicted_iou_threshold and flatness >= stability_threshold:
                out.append((mask, round(0.5 * (fill_ratio + flatness), 6)))
    out.sort(key=lambda mc: (-mc[1], rle_sort_key(mc[0])))
    return out


def rle_sort_key(mask: np.ndarray) -> tuple[int, int]:
    ys, xs = np.nonzero(mask)
    return int(ys.min()), int(xs.min())


def bilinear_resize(values: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = values.shape[:2]
    ys = np.clip((np.arange(out_h) + 0.5) * (h / out_h) - 0.5, 0, h - 1)
    xs = np.clip((np.arange(out_w) + 0.5) * (w / out_w) - 0.5, 0, w - 1)
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


def preprocess(rgb: np.ndarray) -> np.ndarray:
    resized = bilinear_resize(rgb[:, :, :3], 224, 224)
    return (resized / 255.0 - IMAGENET_MEAN) / IMAGENET_STD


def embed(rgb: np.ndarray) -> np.ndarray:
    """Pooled-feature embedding: preprocess, 16x16x3 average pool, flatten,
    L2-normalize. 768 dimensions, deterministic."""
    tensor = preprocess(rgb)
    pooled = tensor.reshape(16, 14, 16, 14, 3).mean(axis=(1, 3))
    flat = pooled.reshape(-1)
    norm = float(np.linalg.norm(flat))
    return flat / norm if norm > 1e-12 else flat


def pair_score(rgb_a: np.ndarray, rgb_b: np.ndarray) -> float:
    """Symmetric perceptual stand-in: mean absolute difference of the two
    preprocessed tensors. Zero for identical inputs."""
    return float(np.mean(np.abs(preprocess(rgb_a) - preprocess(rgb_b))))


def find_text_boxes(rgb: np.ndarray) -> list[tuple[int, int, int, int, float]]:
    """Bright, low-saturation ink grouped into word boxes."""
    v = rgb.astype(np.int32)
    bright = v.min(axis=2) > 215
    flat = (v.max(axis=2) - v.min(axis=2)) < 28
    ink = bright & flat
    grown = ndimage.binary_dilation(ink, iterations=3)
    labels, count = ndimage.label(grown)
    boxes = []
    for idx in range(1, count + 1):
        mask = labels == idx
        ink_px = int((mask & ink).sum())
        if ink_px < 12:
            continue
        ys, xs = np.nonzero(mask)
        x0, x1 = int(xs.min()), int(xs.max()) + 1
        y0, y1 = int(ys.min()), int(ys.max()) + 1
        density = ink_px / ((x1 - x0) * (y1 - y0))
        boxes.append((x0, y0, x1, y1, round(min(1.0, density * 4), 4)))
    boxes.sort(key=lambda b: (b[1], b[0]))
    return boxes


def inpaint(rgb: np.ndarray, mask: np.ndarray, max_passes: int = 512) -> np.ndarray:
    """Iterative boundary fill; unmasked pixels pass through untouched."""
    img = rgb.astype(np.uint8).copy()
    m = mask.astype(bool).copy()
    h, w = m.shape
    passes = 0
    while m.any() and passes < max_passes:
        passes += 1
        un = (~m).astype(np.float64)
        pu = np.zeros((h + 2, w + 2))
        pu[1:-1, 1:-1] = un
        count = sum(
            pu[1 + dy:h + 1 + dy, 1 + dx:w + 1 + dx]
            for dy in (-1, 0, 1)
            for dx in (-1, 0, 1)
            if (dy, dx) != (0, 0)
        )
        frontier = m & (count > 0)
        if not frontier.any():
            break
        vals = img.astype(np.float64) * un[:, :, None]
        pv = np.zeros((h + 2, w + 2, img.shape[2]))
        pv[1:-1, 1:-1] = vals
        acc = sum(
            pv[1 + dy:h + 1 + dy, 1 + dx:w + 1 + dx]
            for dy in (-1, 0, 1)
            for dx in (-1, 0, 1)
            if (dy, dx) != (0, 0)
        )
        img[frontier] = np.rint(acc[frontier] / count[frontier][:, None]).astype(np.uint8)
        m[frontier] = False
    return img
