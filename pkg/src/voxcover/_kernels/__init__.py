"""Hot-kernel backend selection.

The compiled extension (``_native``, built from Cython) is preferred; the
NumPy/pure-Python fallback is selected when the extension is missing or when
``VOXCOVER_PURE_PYTHON=1`` is set. Both expose the same three callables:

- ``unproject_grid(depth, conf, fx, fy, cx, cy, world_from_cam, stride)``
- ``voxel_grid_indices(points, min_corner, delta, dims)``
- ``levenshtein(a, b, substitution_cost=1)``
"""

import os

from . import _fallback

if os.environ.get("VOXCOVER_PURE_PYTHON", "") == "1":
    _impl = _fallback
else:
    try:
        from . import _native as _impl
    except ImportError:
        _impl = _fallback

BACKEND = _impl.BACKEND
unproject_grid = _impl.unproject_grid
voxel_grid_indices = _impl.voxel_grid_indices
levenshtein = _impl.levenshtein


def available_backends():
    """Names of importable backends, compiled one first when present."""
    names = []
    try:
        from . import _native  # noqa: F401
        names.append("native")
    except ImportError:
        pass
    names.append("python")
    return names


def get_backend(name):
    """Fetch a specific backend module ('native' or 'python')."""
    if name == "python":
        return _fallback
    if name == "native":
        from . import _native
        return _native
    raise ValueError(f"unknown kernel backend: {name!r}")
