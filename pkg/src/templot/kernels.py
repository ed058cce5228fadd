"""Kernel backend selection.

Imports the compiled extension when it is built, falling back to the numpy
lane otherwise. TEMPLOT_KERNELS=py|cy forces a lane (cy raises if the
extension is missing). Both lanes are bit-identical; `benchmarks/` compares
their speed.
"""

from __future__ import annotations

import os

from templot import _kernels_py

_forced = os.environ.get("TEMPLOT_KERNELS", "auto").lower()

if _forced == "py":
    _impl = _kernels_py
else:
    try:
        from templot import _kernels_cy as _impl  # type: ignore[no-redef]
    except ImportError:
        if _forced == "cy":
            raise
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND

rle_encode = _impl.rle_encode
rle_decode = _impl.rle_decode
joint_hist = _impl.joint_hist
dilate = _impl.dilate
erode = _impl.erode
inpaint = _impl.inpaint


def available_backends() -> list[str]:
    names = ["py"]
    try:
        from templot import _kernels_cy  # noqa: F401
        names.append("cy")
    except ImportError:
        pass
    return names
