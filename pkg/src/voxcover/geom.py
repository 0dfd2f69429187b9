"""Per-frame depth geometry: unprojection, confidence filtering, scene bounds,
adaptive voxel size, and voxelization.

Conventions
-----------
- Pixel coordinates are (u, v) = (column, row); ``depth[v, u]`` is the depth
  at pixel (u, v). Depth 0 means "no return" and is skipped.
- Poses are stored camera-from-world; unprojection applies the inverse
  (world-from-camera) to camera-space points d * K^-1 (u, v, 1).
- Confidences are per-pixel reliabilities in [0, 1].

All operations are pure functions over effectively immutable inputs, so
per-frame work may run in parallel; outputs do not depend on execution order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    DegenerateSceneError,
    EmptySceneError,
    InputError,
    OutOfBoundsError,
)

DEFAULT_CONF_FLOOR = 0.1
DEFAULT_PERCENTILE = 50.0
DEFAULT_LAMBDA = 20.0
DEFAULT_STRIDE = 4

_BOUNDS_TOLERANCE = 1e-9


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics: focal lengths and principal point, in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        vals = (self.fx, self.fy, self.cx, self.cy)
        if not all(np.isfinite(v) for v in vals):
            raise InputError(f"intrinsics must be finite, got {vals}")
        if self.fx <= 0 or self.fy <= 0:
            raise InputError(f"focal lengths must be positive, got fx={self.fx}, fy={self.fy}")


@dataclass(frozen=True)
class CameraPose:
    """4x4 rigid transform, camera-from-world convention, row-major."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (4, 4):
            raise InputError(f"pose must be 4x4, got shape {m.shape}")
        if not np.isfinite(m).all():
            raise InputError("pose contains non-finite entries")
        r = m[:3, :3]
        if not np.allclose(r @ r.T, np.eye(3), atol=1e-6):
            raise InputError("pose rotation block is not orthonormal within 1e-6")
        if not np.allclose(m[3], [0.0, 0.0, 0.0, 1.0], atol=1e-9):
            raise InputError("pose last row must be (0, 0, 0, 1)")
        object.__setattr__(self, "matrix", m)

    def world_from_camera(self) -> np.ndarray:
        """Analytic rigid inverse [R^T | -R^T t] of the stored transform."""
        r = self.matrix[:3, :3]
        t = self.matrix[:3, 3]
        inv = np.eye(4, dtype=np.float64)
        inv[:3, :3] = r.T
        inv[:3, 3] = -r.T @ t
        return inv


@dataclass(frozen=True)
class CameraFrame:
    """One frame's depth map, confidence map, intrinsics, and pose."""

    frame_id: int
    depth: np.ndarray
    confidence: np.ndarray
    intrinsics: CameraIntrinsics
    pose: CameraPose

    def __post_init__(self):
        d = np.ascontiguousarray(self.depth, dtype=np.float64)
        c = np.ascontiguousarray(self.confidence, dtype=np.float64)
        if d.ndim != 2 or d.shape != c.shape:
            raise InputError(
                f"frame {self.frame_id}: depth {d.shape} and confidence {c.shape} "
                "must be equal 2D shapes"
            )
        if not np.isfinite(d).all() or not np.isfinite(c).all():
            raise InputError(f"frame {self.frame_id}: non-finite depth or confidence")
        if (d < 0).any():
            raise InputError(f"frame {self.frame_id}: negative depths")
        if (c < 0).any() or (c > 1).any():
            raise InputError(f"frame {self.frame_id}: confidences outside [0, 1]")
        object.__setattr__(self, "depth", d)
        object.__setattr__(self, "confidence", c)


@dataclass(frozen=True)
class PointSet:
    """World-space points with parallel confidences, from one frame."""

    frame_id: int
    points: np.ndarray
    confidences: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        c = np.asarray(self.confidences, dtype=np.float64).reshape(-1)
        if len(p) != len(c):
            raise InputError("points and confidences must have equal length")
        if len(p) and not np.isfinite(p).all():
            raise InputError("non-finite point coordinates")
        object.__setattr__(self, "points", p)
        object.__setattr__(self, "confidences", c)

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class SceneBounds:
    """Axis-aligned bounding box of the valid scene points."""

    min_corner: np.ndarray
    max_corner: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min_corner, dtype=np.float64).reshape(3)
        hi = np.asarray(self.max_corner, dtype=np.float64).reshape(3)
        if (lo > hi).any():
            raise InputError(f"min_corner {lo} exceeds max_corner {hi}")
        object.__setattr__(self, "min_corner", lo)
        object.__setattr__(self, "max_corner", hi)

    @property
    def extents(self) -> np.ndarray:
        return self.max_corner - self.min_corner


@dataclass(frozen=True)
class FrameVoxelSet:
    """The set of discrete voxel indices one frame observes."""

    frame_id: int
    voxels: frozenset

    def __len__(self):
        return len(self.voxels)


def unproject_pixels(u, v, depth, intrinsics: CameraIntrinsics, pose: CameraPose) -> np.ndarray:
    """Lift pixel coordinates with depths to world points.

    Accepts scalars or arrays; returns an (N, 3) array. The camera-space
    point is (d*(u-cx)/fx, d*(v-cy)/fy, d); the world point applies the
    pose inverse.
    """
    u = np.asarray(u, dtype=np.float64).reshape(-1)
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    d = np.asarray(depth, dtype=np.float64).reshape(-1)
    xc = d * (u - intrinsics.cx) / intrinsics.fx
    yc = d * (v - intrinsics.cy) / intrinsics.fy
    cam = np.stack([xc, yc, d, np.ones_like(d)], axis=1)
    world = cam @ pose.world_from_camera().T
    return world[:, :3]


def unproject_frame(frame: CameraFrame, stride: int = DEFAULT_STRIDE) -> PointSet:
    """Unproject every stride-th pixel of a frame into world space.

    Pixels with depth 0 are skipped; confidences are carried along
    per point.
    """
    if stride < 1:
        raise InputError(f"stride must be >= 1, got {stride}")
    points, confs = _kernels.unproject_grid(
        frame.depth,
        frame.confidence,
        frame.intrinsics.fx,
        frame.intrinsics.fy,
        frame.intrinsics.cx,
        frame.intrinsics.cy,
        frame.pose.world_from_camera(),
        stride,
    )
    return PointSet(frame_id=frame.frame_id, points=points, confidences=confs)


def pooled_confidence_threshold(point_sets, percentile: float) -> float:
    """Percentile (linear interpolation) of confidences pooled over all sets."""
    pooled = np.concatenate([ps.confidences for ps in point_sets]) if point_sets else np.empty(0)
    if pooled.size == 0:
        raise EmptySceneError("no points to pool confidences over")
    return float(np.percentile(pooled, percentile))


def filter_valid(
    point_sets,
    conf_floor: float = DEFAULT_CONF_FLOOR,
    percentile: float = DEFAULT_PERCENTILE,
):
    """Keep points with c > conf_floor and c >= the pooled percentile.

    The percentile is computed once over all confidences pooled across every
    input set; the per-frame structure of the result mirrors the input.
    """
    if not 0.0 <= conf_floor <= 1.0:
        raise InputError(f"conf_floor must be in [0, 1], got {conf_floor}")
    if not 0.0 <= percentile <= 100.0:
        raise InputError(f"percentile must be in [0, 100], got {percentile}")
    threshold = pooled_confidence_threshold(point_sets, percentile)
    out = []
    for ps in point_sets:
        keep = (ps.confidences > conf_floor) & (ps.confidences >= threshold)
        out.append(
            PointSet(
                frame_id=ps.frame_id,
                points=ps.points[keep],
                confidences=ps.confidences[keep],
            )
        )
    return out


def scene_bounds(point_sets) -> SceneBounds:
    """Componentwise min/max over every point in every set."""
    stacks = [ps.points for ps in point_sets if len(ps)]
    if not stacks:
        raise EmptySceneError("cannot bound an empty scene")
    allpts = np.concatenate(stacks, axis=0)
    return SceneBounds(min_corner=allpts.min(axis=0), max_corner=allpts.max(axis=0))


def voxel_size(bounds: SceneBounds, lam: float = DEFAULT_LAMBDA) -> float:
    """Adaptive voxel edge length: 1/lam of the smallest box extent.

    A zero minimum extent (planar scene) falls back to the largest nonzero
    extent; a fully degenerate box (single point) is an error.
    """
    if lam <= 0:
        raise InputError(f"lambda must be positive, got {lam}")
    ext = bounds.extents
    smallest = float(ext.min())
    if smallest == 0.0:
        largest = float(ext.max())
        if largest == 0.0:
            raise DegenerateSceneError("all bounding-box extents are zero")
        smallest = largest
    return smallest / lam


def grid_dims(bounds: SceneBounds, delta: float) -> np.ndarray:
    """Voxel-grid dimensions: ceil(extent/delta) per axis, at least 1."""
    dims = np.ceil(bounds.extents / delta).astype(np.int64)
    return np.maximum(dims, 1)


def voxelize(points: PointSet, bounds: SceneBounds, delta: float) -> FrameVoxelSet:
    """Discretize a point set into the voxel indices it covers.

    Index = floor((p - min_corner)/delta) per axis; points exactly on the
    max corner clamp into the last voxel. Duplicates collapse.
    """
    if delta <= 0:
        raise InputError(f"delta must be positive, got {delta}")
    pts = points.points
    if len(pts) == 0:
        return FrameVoxelSet(frame_id=points.frame_id, voxels=frozenset())
    lo = bounds.min_corner - _BOUNDS_TOLERANCE
    hi = bounds.max_corner + _BOUNDS_TOLERANCE
    if (pts < lo).any() or (pts > hi).any():
        bad = np.where((pts < lo).any(axis=1) | (pts > hi).any(axis=1))[0]
        raise OutOfBoundsError(
            f"frame {points.frame_id}: {len(bad)} point(s) outside bounds, "
            f"first at index {int(bad[0])}: {pts[bad[0]].tolist()}"
        )
    dims = grid_dims(bounds, delta)
    idx = _kernels.voxel_grid_indices(pts, bounds.min_corner, float(delta), dims)
    voxels = frozenset(map(tuple, idx.tolist()))
    return FrameVoxelSet(frame_id=points.frame_id, voxels=voxels)
