"""Writers for the templot interchange formats.

Implemented against the documented schemas, deliberately not imported from
the pipeline package: adapters must stay installable on a bare model host.
"""

from __future__ import annotations

import json
import struct
from typing import Any, Optional, Sequence

import numpy as np

FEATURE_MAGIC = b"TBOF"
FEATURE_VERSION = 1


def rle_encode(bitmap: np.ndarray) -> list[int]:
    """Row-major run lengths, alternating background/foreground, starting
    with background (first run may be 0)."""
    flat = np.ascontiguousarray(bitmap, dtype=np.uint8).ravel()
    if flat.size == 0:
        return []
    changes = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], changes, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0] != 0:
        runs = [0] + runs
    return [int(r) for r in runs]


def mask_json(bitmap: np.ndarray) -> dict[str, Any]:
    h, w = bitmap.shape
    return {"width": int(w), "height": int(h), "runs": rle_encode(bitmap)}


def write_json(path: str, obj: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifest(
    path: str,
    image_id: str,
    image_path: str,
    masks: Sequence[np.ndarray],
    confidences: Sequence[Optional[float]],
    segmenter: dict[str, Any],
) -> None:
    write_json(
        path,
        {
            "image_id": image_id,
            "image_path": image_path,
            "segmenter": segmenter,
            "proposals": [
                {"mask": mask_json(m), "confidence": c}
                for m, c in zip(masks, confidences)
            ],
        },
    )


def write_features(path: str, ids: Sequence[int], matrix: np.ndarray) -> None:
    """TBOF: magic, u16 version, u32 dim, u32 count, count*dim LE f32;
    row-to-id sidecar at <path>.json."""
    mat = np.ascontiguousarray(matrix, dtype="<f4")
    count, dim = mat.shape
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<HII", FEATURE_VERSION, dim, count))
        fh.write(mat.tobytes())
    write_json(path + ".json", {"ids": [int(i) for i in ids]})


def write_pair_scores(path: str, pairs: Sequence[tuple[int, int, float]]) -> None:
    write_json(
        path,
        {
            "pairs": [
                {"proposal_id": int(p), "class_id": int(c), "score": float(s)}
                for p, c, s in pairs
            ]
        },
    )


def write_ocr(path: str, boxes: Sequence[tuple[int, int, int, int, Optional[float]]]) -> None:
    write_json(
        path,
        [
            {"bbox": [int(x0), int(y0), int(x1), int(y1)], "confidence": conf}
            for x0, y0, x1, y1, conf in boxes
        ],
    )
