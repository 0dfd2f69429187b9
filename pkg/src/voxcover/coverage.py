"""Frame selection as maximum voxel coverage.

Select k frames out of the candidate pool so the number of unique voxels
their points cover is as large as possible. The greedy selector picks the
frame with the largest marginal gain each round (ties broken by lowest
frame id) and stops early once no candidate adds coverage. An exhaustive
selector provides the optimum for small instances, for verification.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

from . import geom
from .errors import EmptyInstanceError, InputError, InstanceTooLargeError
from .util import thread_map

DEFAULT_N_M = 128
DEFAULT_N_K = 16

EXHAUSTIVE_GUARD = 10**6


@dataclass(frozen=True)
class CoverageInstance:
    """Frame voxel sets plus the target selection count k."""

    frame_sets: tuple
    k: int

    def __post_init__(self):
        sets = tuple(self.frame_sets)
        if not sets:
            raise EmptyInstanceError("coverage instance has no frame sets")
        if self.k < 1:
            raise InputError(f"k must be positive, got {self.k}")
        if self.k > len(sets):
            raise InputError(f"k={self.k} exceeds {len(sets)} frame sets")
        ids = [fs.frame_id for fs in sets]
        if len(set(ids)) != len(ids):
            raise InputError("duplicate frame ids in coverage instance")
        object.__setattr__(self, "frame_sets", sets)

    def universe_size(self) -> int:
        u = set()
        for fs in self.frame_sets:
            u |= fs.voxels
        return len(u)


@dataclass(frozen=True)
class SelectionResult:
    """Chosen frame ids in selection order with per-step coverage gains.

    ``early_stop`` is set when fewer than k frames were selected because no
    remaining candidate added coverage.
    """

    selected_ids: tuple
    per_step_gain: tuple
    early_stop: bool

    @property
    def covered_count(self) -> int:
        return sum(self.per_step_gain)


def uniform_subsample(total_frames: int, m: int):
    """Indices floor(i * total / m) for i in 0..m-1; strictly increasing."""
    if total_frames < 1 or m < 1:
        raise InputError("total_frames and m must be positive")
    if m > total_frames:
        raise InputError(f"cannot subsample {m} frames from {total_frames}")
    return [i * total_frames // m for i in range(m)]


def greedy_select(instance: CoverageInstance) -> SelectionResult:
    """Greedy maximum coverage: repeatedly take the best marginal gain.

    Deterministic: candidates are scanned in ascending frame-id order and a
    tie keeps the earlier (lower) id. Breaks out as soon as the best gain
    is zero.
    """
    # Residual sets shrink as voxels get covered, so the gain of a candidate
    # is just len(residual).
    residual = {fs.frame_id: set(fs.voxels) for fs in instance.frame_sets}
    order = sorted(residual)
    selected = []
    gains = []
    for _ in range(instance.k):
        best_id = None
        best_gain = 0
        for fid in order:
            if fid in residual:
                g = len(residual[fid])
                if g > best_gain:
                    best_gain = g
                    best_id = fid
        if best_id is None:
            break
        newly = residual.pop(best_id)
        selected.append(best_id)
        gains.append(best_gain)
        for fid in residual:
            residual[fid] -= newly
    return SelectionResult(
        selected_ids=tuple(selected),
        per_step_gain=tuple(gains),
        early_stop=len(selected) < instance.k,
    )


def _order_within_subset(sets_by_id, chosen):
    """Greedy ordering of a fixed subset; drops members with zero gain."""
    remaining = sorted(chosen)
    covered = set()
    ordered = []
    gains = []
    while remaining:
        best_id = None
        best_gain = 0
        for fid in remaining:
            g = len(sets_by_id[fid] - covered)
            if g > best_gain:
                best_gain = g
                best_id = fid
        if best_id is None:
            break
        remaining.remove(best_id)
        covered |= sets_by_id[best_id]
        ordered.append(best_id)
        gains.append(best_gain)
    return ordered, gains


def exhaustive_select(instance: CoverageInstance) -> SelectionResult:
    """Optimal coverage by enumerating all candidate subsets of size <= k.

    Among maximum-coverage subsets, returns the lexicographically smallest
    sorted id list. Members contributing no coverage in the reported order
    are dropped, keeping every reported gain positive. Guarded against
    combinatorial blowup.
    """
    set_map = {fs.frame_id: set(fs.voxels) for fs in instance.frame_sets}
    ids = sorted(set_map)
    n = len(ids)
    kk = min(instance.k, n)
    total = sum(comb(n, j) for j in range(1, kk + 1))
    if total > EXHAUSTIVE_GUARD:
        raise InstanceTooLargeError(
            f"{total} subsets to enumerate exceeds the {EXHAUSTIVE_GUARD} guard"
        )
    best_cov = -1
    best_ids = None
    for j in range(1, kk + 1):
        for combo in combinations(ids, j):
            cov = len(set().union(*(set_map[f] for f in combo)))
            if cov > best_cov or (cov == best_cov and combo < best_ids):
                best_cov = cov
                best_ids = combo
    ordered, gains = _order_within_subset(set_map, best_ids)
    return SelectionResult(
        selected_ids=tuple(ordered),
        per_step_gain=tuple(gains),
        early_stop=len(ordered) < instance.k,
    )


@dataclass(frozen=True)
class SceneVoxelization:
    """Per-frame voxel sets plus the shared grid they were computed on."""

    frame_sets: tuple
    filtered_points: tuple
    bounds: geom.SceneBounds
    delta: float

    @property
    def total_voxels(self) -> int:
        u = set()
        for fs in self.frame_sets:
            u |= fs.voxels
        return len(u)


def voxelize_frames(
    frames,
    lam: float = geom.DEFAULT_LAMBDA,
    conf_floor: float = geom.DEFAULT_CONF_FLOOR,
    percentile: float = geom.DEFAULT_PERCENTILE,
    stride: int = geom.DEFAULT_STRIDE,
) -> SceneVoxelization:
    """Unproject, filter, and voxelize a batch of frames on a shared grid.

    Per-frame voxel sets are computed once here; selection reuses them
    without recomputation.
    """
    point_sets = thread_map(lambda f: geom.unproject_frame(f, stride=stride), frames)
    valid = geom.filter_valid(point_sets, conf_floor=conf_floor, percentile=percentile)
    bounds = geom.scene_bounds(valid)
    delta = geom.voxel_size(bounds, lam=lam)
    frame_sets = thread_map(lambda ps: geom.voxelize(ps, bounds, delta), valid)
    return SceneVoxelization(
        frame_sets=tuple(frame_sets),
        filtered_points=tuple(valid),
        bounds=bounds,
        delta=delta,
    )


def select_frames(
    frames,
    k: int = DEFAULT_N_K,
    lam: float = geom.DEFAULT_LAMBDA,
    conf_floor: float = geom.DEFAULT_CONF_FLOOR,
    percentile: float = geom.DEFAULT_PERCENTILE,
    stride: int = geom.DEFAULT_STRIDE,
) -> SelectionResult:
    """End-to-end space-aware selection of k frames from a candidate pool."""
    if k > len(frames):
        raise InputError(f"k={k} exceeds {len(frames)} candidate frames")
    scene = voxelize_frames(
        frames, lam=lam, conf_floor=conf_floor, percentile=percentile, stride=stride
    )
    return greedy_select(CoverageInstance(frame_sets=scene.frame_sets, k=k))
