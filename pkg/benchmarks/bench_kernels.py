"""Compare the compiled kernel lane against the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]

Times the four hot per-pixel kernels on realistic shapes (full-scene masks
and images, proposal-sized pixel sets) and verifies both lanes agree
bit-for-bit on every input while timing them.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from templot import _kernels_py as kpy

try:
    from templot import _kernels_cy as kcy
except ImportError:
    kcy = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    if kcy is None:
        print("compiled lane not built; run: python3 setup.py build_ext --inplace")
        return 1

    rng = np.random.default_rng(0)
    h, w = 697, 1800
    scene_mask = (rng.random((h, w)) < 0.03).astype(np.uint8)
    scene_img = rng.integers(0, 256, (h, w, 3)).astype(np.uint8)
    text_mask = np.zeros((h, w), dtype=np.uint8)
    for _ in range(200):  # stroke-like mask patches
        y, x = int(rng.integers(0, h - 12)), int(rng.integers(0, w - 60))
        text_mask[y:y + 8, x:x + 50] = 1
    pixels = rng.integers(0, 256, (200_000, 3)).astype(np.uint8)
    flat = scene_mask.ravel()

    cases = [
        ("rle_encode 1.25Mpx", lambda k: k.rle_encode(flat)),
        ("rle_decode 1.25Mpx", lambda k, _r=kpy.rle_encode(flat): k.rle_decode(_r, flat.size)),
        ("joint_hist 200k px", lambda k: k.joint_hist(pixels, 8)),
        ("dilate x2 1.25Mpx", lambda k: k.dilate(scene_mask, 2)),
        ("erode x1 1.25Mpx", lambda k: k.erode(scene_mask, 1)),
        ("inpaint text mask", lambda k: k.inpaint(scene_img, text_mask, 64)),
    ]

    print(f"{'kernel':<22}{'numpy ms':>12}{'cython ms':>12}{'speedup':>10}")
    for name, call in cases:
        t_py, r_py = timeit(lambda: call(kpy), args.repeats)
        t_cy, r_cy = timeit(lambda: call(kcy), args.repeats)
        if isinstance(r_py, tuple):
            assert r_py[1] == r_cy[1] and (r_py[0] == r_cy[0]).all(), f"{name}: lanes disagree"
        else:
            assert (np.asarray(r_py) == np.asarray(r_cy)).all(), f"{name}: lanes disagree"
        print(f"{name:<22}{t_py * 1e3:>12.2f}{t_cy * 1e3:>12.2f}{t_py / t_cy:>10.2f}x")
    print("all outputs bit-identical across lanes")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
