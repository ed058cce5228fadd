"""Regenerate the two bundled sample images (deterministic).

Map-like scenes: pastel gradient background, a darker road band, a few
flat-color icon-like shapes, and white text strokes for the OCR adapter.
"""

import os

import numpy as np
from PIL import Image

HERE = os.path.dirname(os.path.abspath(__file__))

GLYPHS = {
    "A": (".##.", "#..#", "####", "#..#", "#..#"),
    "B": ("###.", "#..#", "###.", "#..#", "###."),
    "C": (".###", "#...", "#...", "#...", ".###"),
    "E": ("####", "#...", "###.", "#...", "####"),
    "M": ("#..#", "####", "####", "#..#", "#..#"),
    "S": (".###", "#...", ".##.", "...#", "###."),
    "T": ("####", ".#..", ".#..", ".#..", ".#.."),
}


def draw_word(canvas, word, x, y, scale):
    for ch in word:
        rows = GLYPHS[ch]
        for r, row in enumerate(rows):
            for c, bit in enumerate(row):
                if bit == "#":
                    y0, x0 = y + r * scale, x + c * scale
                    canvas[y0:y0 + scale, x0:x0 + scale] = (255, 255, 255)
        x += (len(rows[0]) + 1) * scale


def scene(seed):
    rng = np.random.default_rng(seed)
    h, w = 200, 320
    c1 = rng.uniform(160, 200, 3)
    c2 = rng.uniform(160, 200, 3)
    t = (np.arange(h) / (h - 1))[:, None, None]
    canvas = (c1 * (1 - t) + c2 * t) * np.ones((h, w, 3))
    canvas = np.rint(canvas).astype(np.uint8)
    canvas[120:136, :] = (105, 102, 98)  # road band

    shapes = [
        ((30, 40, 36), (200, 60, 50)),
        ((60, 150, 30), (40, 120, 200)),
        ((140, 240, 34), (220, 170, 30)),
    ]
    for (y, x, size), color in shapes:
        canvas[y:y + size, x:x + size] = color
        inner = size // 3
        canvas[y + inner:y + 2 * inner, x + inner:x + 2 * inner] = (30, 30, 30)

    yy, xx = np.mgrid[0:h, 0:w]
    disk = (xx - 260) ** 2 + (yy - 60) ** 2 <= 18 ** 2
    canvas[disk] = (60, 170, 80)

    words = [("MATS", 20, 150, 2), ("BEE", 180, 20, 3)] if seed == 0 else [("CAT", 60, 100, 2), ("SAM", 200, 160, 2)]
    for word, x, y, scale in words:
        draw_word(canvas, word, x, y, scale)
    return canvas


def main():
    for i in range(2):
        Image.fromarray(scene(i)).save(
            os.path.join(HERE, f"sample_{i:03d}.png"), format="PNG", compress_level=6
        )
    print("wrote sample_000.png sample_001.png")


if __name__ == "__main__":
    main()
