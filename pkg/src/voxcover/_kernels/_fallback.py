"""Pure NumPy / pure Python implementations of the hot kernels.

Used when the compiled extension is unavailable or explicitly disabled via
VOXCOVER_PURE_PYTHON=1. Same contracts as ``voxcover._kernels._native``.
"""

import numpy as np

BACKEND = "python"


def unproject_grid(depth, conf, fx, fy, cx, cy, world_from_cam, stride):
    """Lift a strided depth grid to world-space points.

    Pixels are scanned row-major with the given stride; zero-depth pixels
    (no return) are skipped. Returns (points (N,3), confidences (N,)).
    """
    d = depth[::stride, ::stride]
    c = conf[::stride, ::stride]
    h, w = d.shape
    vs, us = np.meshgrid(
        np.arange(0, depth.shape[0], stride, dtype=np.float64),
        np.arange(0, depth.shape[1], stride, dtype=np.float64),
        indexing="ij",
    )
    keep = d != 0.0
    d = d[keep]
    us = us[keep]
    vs = vs[keep]
    xc = d * (us - cx) / fx
    yc = d * (vs - cy) / fy
    zc = d
    m = world_from_cam
    # Elementwise expansion keeps per-point arithmetic identical to the C loop.
    xw = m[0, 0] * xc + m[0, 1] * yc + m[0, 2] * zc + m[0, 3]
    yw = m[1, 0] * xc + m[1, 1] * yc + m[1, 2] * zc + m[1, 3]
    zw = m[2, 0] * xc + m[2, 1] * yc + m[2, 2] * zc + m[2, 3]
    points = np.stack([xw, yw, zw], axis=1)
    return np.ascontiguousarray(points), np.ascontiguousarray(c[keep], dtype=np.float64)


def voxel_grid_indices(points, min_corner, delta, dims):
    """floor((p - min_corner) / delta) per axis, clamped into [0, dims)."""
    idx = np.floor((points - min_corner[np.newaxis, :]) / delta).astype(np.int64)
    np.clip(idx, 0, np.asarray(dims, dtype=np.int64) - 1, out=idx)
    return idx


def levenshtein(a, b, substitution_cost=1):
    """Edit distance with unit insert/delete and configurable substitution cost."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    cur = [0] * (len(b) + 1)
    for i, ca in enumerate(a, start=1):
        cur[0] = i
        for j, cb in enumerate(b, start=1):
            sub = prev[j - 1] + (0 if ca == cb else substitution_cost)
            ins = cur[j - 1] + 1
            dele = prev[j] + 1
            cur[j] = sub if sub <= ins and sub <= dele else (ins if ins <= dele else dele)
        prev, cur = cur, prev
    return prev[len(b)]
