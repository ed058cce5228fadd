"""Pure numpy implementations of the per-pixel kernels.

Mirror of the compiled module `_kernels_cy`; `kernels` picks one at import.
Both lanes must produce bit-identical output: all arithmetic here is exact
(integer counts, f64 sums of 8-bit values) so vectorization order is free.
"""

from __future__ import annotations

import numpy as np

BACKEND = "py"


def rle_encode(flat: np.ndarray) -> np.ndarray:
    """Run lengths of a flat 0/1 array, first run counting zeros (may be 0)."""
    flat = np.ascontiguousarray(flat, dtype=np.uint8)
    n = flat.size
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], changes, [n]))
    runs = np.diff(bounds).astype(np.int64)
    if flat[0] != 0:
        runs = np.concatenate(([0], runs))
    return runs


def rle_decode(runs: np.ndarray, size: int) -> np.ndarray:
    """Inverse of rle_encode; returns a flat uint8 array of `size` pixels."""
    runs = np.asarray(runs, dtype=np.int64)
    values = np.zeros(runs.size, dtype=np.uint8)
    values[1::2] = 1
    out = np.repeat(values, runs)
    if out.size != size:
        raise ValueError(f"runs cover {out.size} pixels, expected {size}")
    return out


def joint_hist(pixels: np.ndarray, bins: int) -> np.ndarray:
    """Joint RGB histogram: bin index = (rb * B + gb) * B + bb, cb = c*B // 256."""
    p = np.asarray(pixels, dtype=np.int64)
    if p.ndim != 2 or p.shape[1] != 3:
        raise ValueError("pixels must be (n, 3)")
    idx = ((p[:, 0] * bins) // 256 * bins + (p[:, 1] * bins) // 256) * bins + (p[:, 2] * bins) // 256
    return np.bincount(idx, minlength=bins ** 3).astype(np.int64)


def _shift_sum(padded: np.ndarray) -> np.ndarray:
    # 8-neighborhood (no center) over a 1-px zero-padded array
    return (
        padded[:-2, :-2] + padded[:-2, 1:-1] + padded[:-2, 2:]
        + padded[1:-1, :-2] + padded[1:-1, 2:]
        + padded[2:, :-2] + padded[2:, 1:-1] + padded[2:, 2:]
    )


def dilate(mask: np.ndarray, iterations: int) -> np.ndarray:
    """Binary 3x3 dilation; outside the image counts as background."""
    m = np.asarray(mask, dtype=bool)
    h, w = m.shape
    for _ in range(iterations):
        p = np.zeros((h + 2, w + 2), dtype=bool)
        p[1:-1, 1:-1] = m
        m = (
            p[:-2, :-2] | p[:-2, 1:-1] | p[:-2, 2:]
            | p[1:-1, :-2] | p[1:-1, 1:-1] | p[1:-1, 2:]
            | p[2:, :-2] | p[2:, 1:-1] | p[2:, 2:]
        )
    return m.astype(np.uint8)


def erode(mask: np.ndarray, iterations: int) -> np.ndarray:
    """Binary 3x3 erosion; outside the image counts as background."""
    m = np.asarray(mask, dtype=bool)
    h, w = m.shape
    for _ in range(iterations):
        p = np.zeros((h + 2, w + 2), dtype=bool)
        p[1:-1, 1:-1] = m
        m = (
            p[:-2, :-2] & p[:-2, 1:-1] & p[:-2, 2:]
            & p[1:-1, :-2] & p[1:-1, 1:-1] & p[1:-1, 2:]
            & p[2:, :-2] & p[2:, 1:-1] & p[2:, 2:]
        )
    return m.astype(np.uint8)


def inpaint(image: np.ndarray, mask: np.ndarray, max_passes: int) -> tuple[np.ndarray, int]:
    """Iterative boundary fill.

    Each pass assigns every masked pixel that has at least one unmasked
    8-neighbor the rounded average of those neighbors (computed from the
    state at the start of the pass), then unmasks it. Returns the filled
    image and the number of still-masked pixels (0 unless max_passes ran out).
    """
    img = np.array(image, dtype=np.uint8, copy=True)
    if img.ndim != 3:
        raise ValueError("image must be (h, w, c)")
    h, w, c = img.shape
    m = np.asarray(mask, dtype=bool).copy()
    if m.shape != (h, w):
        raise ValueError("mask shape must match image")
    passes = 0
    while m.any() and passes < max_passes:
        passes += 1
        un = (~m).astype(np.float64)
        pu = np.zeros((h + 2, w + 2), dtype=np.float64)
        pu[1:-1, 1:-1] = un
        count = _shift_sum(pu)
        frontier = m & (count > 0)
        if not frontier.any():
            break
        vals = img.astype(np.float64) * un[:, :, None]
        filled = np.empty((h, w, c), dtype=np.float64)
        for ch in range(c):
            pv = np.zeros((h + 2, w + 2), dtype=np.float64)
            pv[1:-1, 1:-1] = vals[:, :, ch]
            filled[:, :, ch] = _shift_sum(pv)
        img[frontier] = np.rint(filled[frontier] / count[frontier][:, None]).astype(np.uint8)
        m[frontier] = False
    return img, int(m.sum())
