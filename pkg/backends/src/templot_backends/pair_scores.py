"""Pairwise-distance adapter: score proposal crops against template crops.

Engines: lpips (AlexNet variant), builtin (normalized patch distance).
Writes one pair-score JSON covering every (proposal, template) pair;
proposal ids from trailing digits of crop filenames, class ids likewise
from template filenames.
"""

from __future__ import annotations

import os

import numpy as np

from templot_backends import _cli, builtin, formats
from templot_backends.embed import id_for


def _score_lpips(pairs, params):
    try:
        import lpips
        import torch
    except ImportError as exc:
        raise _cli.missing_runtime("lpips", "lpips (+torch)") from exc
    model = lpips.LPIPS(net=params.get("net", "alex"))
    model.eval()

    def to_tensor(rgb: np.ndarray):
        resized = builtin.bilinear_resize(rgb, 224, 224) / 255.0
        return torch.from_numpy((resized * 2 - 1).transpose(2, 0, 1)[None]).float()

    out = []
    with torch.no_grad():
        for pid, cid, a, b in pairs:
            out.append((pid, cid, float(model(to_tensor(a), to_tensor(b)).item())))
    return out


def _score_builtin(pairs, params):
    return [(pid, cid, builtin.pair_score(a, b)) for pid, cid, a, b in pairs]


ENGINES = {"builtin": _score_builtin, "lpips": _score_lpips}


def run(args) -> int:
    params = _cli.load_params(args.params)
    engine = ENGINES.get(args.engine)
    if engine is None:
        raise _cli.AdapterError(f"unknown engine {args.engine!r}; choose from {sorted(ENGINES)}")
    prop_names = _cli.list_pngs(args.images)
    tmpl_names = _cli.list_pngs(args.templates)
    proposals = [
        (id_for(n, i), _cli.load_rgb(os.path.join(args.images, n)))
        for i, n in enumerate(prop_names)
    ]
    templates = [
        (id_for(n, i), _cli.load_rgb(os.path.join(args.templates, n)))
        for i, n in enumerate(tmpl_names)
    ]
    pairs = [(pid, cid, a, b) for pid, a in proposals for cid, b in templates]
    scored = engine(pairs, params)
    os.makedirs(args.out, exist_ok=True)
    out_path = os.path.join(args.out, args.name)
    formats.write_pair_scores(out_path, scored)
    print(out_path)
    return 0


def main(argv=None) -> int:
    parser = _cli.base_parser(__doc__)
    parser.add_argument("--templates", required=True, help="template crop directory")
    parser.add_argument("--engine", default="builtin", choices=sorted(ENGINES))
    parser.add_argument("--name", default="pair_scores.json", help="output file name")
    return _cli.run(run, parser.parse_args(argv))


if __name__ == "__main__":
    raise SystemExit(main())
