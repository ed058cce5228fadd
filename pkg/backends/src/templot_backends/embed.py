"""Embedding adapter: one TBOF feature file for a directory of crops.

Engines: clip (open_clip image encoder), builtin (deterministic pooled
features). Row ids come from trailing digits in each filename, falling back
to the sort index, so template files like icon_07.png map to class id 7.
"""

from __future__ import annotations

import os
import re

import numpy as np

from templot_backends import _cli, builtin, formats


def id_for(name: str, index: int) -> int:
    match = re.search(r"(\d+)\D*$", os.path.splitext(name)[0])
    return int(match.group(1)) if match else index


def _embed_clip(rgbs: list[np.ndarray], params: dict) -> np.ndarray:
    try:
        import open_clip
        import torch
        from PIL import Image
    except ImportError as exc:
        raise _cli.missing_runtime("clip", "open_clip_torch (+torch)") from exc
    model_name = params.get("model", "ViT-B-32")
    pretrained = params.get("pretrained", "openai")
    model, _, transform = open_clip.create_model_and_transforms(model_name, pretrained=pretrained)
    model.eval()
    rows = []
    with torch.no_grad():
        for rgb in rgbs:
            tensor = transform(Image.fromarray(rgb)).unsqueeze(0)
            rows.append(model.encode_image(tensor).squeeze(0).cpu().numpy())
    return np.stack(rows)


def _embed_builtin(rgbs: list[np.ndarray], params: dict) -> np.ndarray:
    return np.stack([builtin.embed(rgb) for rgb in rgbs])


ENGINES = {"builtin": _embed_builtin, "clip": _embed_clip}


def run(args) -> int:
    params = _cli.load_params(args.params)
    engine = ENGINES.get(args.engine)
    if engine is None:
        raise _cli.AdapterError(f"unknown engine {args.engine!r}; choose from {sorted(ENGINES)}")
    names = _cli.list_pngs(args.images)
    rgbs = [_cli.load_rgb(os.path.join(args.images, n)) for n in names]
    matrix = engine(rgbs, params)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, args.name)
    formats.write_features(out_path, [id_for(n, i) for i, n in enumerate(names)], matrix)
    print(out_path)
    return 0


def main(argv=None) -> int:
    parser = _cli.base_parser(__doc__)
    parser.add_argument("--engine", default="builtin", choices=sorted(ENGINES))
    parser.add_argument("--name", default="features.tbof", help="output file name")
    return _cli.run(run, parser.parse_args(argv))


if __name__ == "__main__":
    raise SystemExit(main())
