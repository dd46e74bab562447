"""Backend selection for the geometry hot loops.

The compiled extension is used when it was built; otherwise the pure-Python
twin is loaded. Set ``ANYTIME_TAMP_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("ANYTIME_TAMP_PURE", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

BACKEND: str = _impl.BACKEND
Obstacles = _impl.Obstacles
NearestIndex = _impl.NearestIndex
point_in_obstacles = _impl.point_in_obstacles
segment_hits_obstacles = _impl.segment_hits_obstacles
polyline_sampled_free = _impl.polyline_sampled_free
rrt_grow = _impl.rrt_grow


def available_backends():
    """Return the kernel modules importable in this environment, by name."""
    found = {"python": _kernels_py}
    try:
        from . import _ckernels  # type: ignore[attr-defined]

        found["cython"] = _ckernels
    except ImportError:
        pass
    return found
