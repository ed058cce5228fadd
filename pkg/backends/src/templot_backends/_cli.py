"""Shared adapter CLI plumbing: argument handling, error JSON, image IO."""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Callable, Optional

import numpy as np
from PIL import Image


class AdapterError(Exception):
    """Data or model failure; maps to exit code 3 with a JSON error."""


def load_rgb(path: str) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"))
    except (OSError, ValueError) as exc:
        raise AdapterError(f"cannot load image {path}: {exc}") from exc


def save_png(path: str, rgb: np.ndarray) -> None:
    Image.fromarray(rgb.astype(np.uint8)).save(path, format="PNG", compress_level=1)


def list_pngs(directory: str) -> list[str]:
    if not os.path.isdir(directory):
        raise AdapterError(f"image directory not found: {directory}")
    names = sorted(f for f in os.listdir(directory) if f.lower().endswith(".png"))
    if not names:
        raise AdapterError(f"no PNG images in {directory}")
    return names


def load_params(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise AdapterError(f"cannot read params {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise AdapterError(f"params {path} must be a JSON object")
    return doc


def base_parser(description: str) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description=description)
    parser.add_argument("--images", required=True, help="input image directory")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--params", help="JSON parameter file")
    return parser


def run(fn: Callable[[argparse.Namespace], int], args: argparse.Namespace) -> int:
    try:
        return fn(args)
    except AdapterError as exc:
        print(json.dumps({"error": "AdapterError", "message": str(exc)}), file=sys.stderr)
        return 3
    except Exception as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 4


def missing_runtime(engine: str, package: str) -> AdapterError:
    return AdapterError(
        f"engine {engine!r} needs the optional dependency {package!r}; "
        f"install it or use --engine builtin"
    )
