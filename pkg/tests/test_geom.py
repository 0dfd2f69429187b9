"""Geometry tests: unprojection round trips, filtering, bounds, voxel grids."""

import numpy as np
import pytest

from voxcover import geom
from voxcover.errors import (
    DegenerateSceneError,
    EmptySceneError,
    InputError,
    OutOfBoundsError,
)

from helpers import project_points, random_pose


def _frame(depth, conf=None, intr=None, pose=None, frame_id=0):
    depth = np.asarray(depth, dtype=np.float64)
    if conf is None:
        conf = np.ones_like(depth)
    return geom.CameraFrame(
        frame_id=frame_id,
        depth=depth,
        confidence=conf,
        intrinsics=intr or geom.CameraIntrinsics(fx=1, fy=1, cx=0, cy=0),
        pose=pose or geom.CameraPose(np.eye(4)),
    )


def _point_set(points, confs, frame_id=0):
    return geom.PointSet(frame_id=frame_id, points=np.asarray(points, dtype=float),
                         confidences=np.asarray(confs, dtype=float))


class TestUnproject:
    def test_identity_intrinsics_pixel(self):
        depth = np.zeros((5, 5))
        depth[3, 2] = 4.0  # pixel (u=2, v=3)
        ps = geom.unproject_frame(_frame(depth), stride=1)
        assert ps.points.tolist() == [[8.0, 12.0, 4.0]]
        assert ps.confidences.tolist() == [1.0]

    def test_principal_point_ray(self):
        depth = np.zeros((3, 3))
        depth[1, 1] = 5.0
        intr = geom.CameraIntrinsics(fx=2, fy=2, cx=1, cy=1)
        ps = geom.unproject_frame(_frame(depth, intr=intr), stride=1)
        assert ps.points.tolist() == [[0.0, 0.0, 5.0]]

    def test_zero_depth_skipped(self):
        depth = np.zeros((4, 4))
        depth[0, 0] = 1.0
        depth[2, 2] = 2.0
        ps = geom.unproject_frame(_frame(depth), stride=1)
        assert len(ps) == 2

    def test_stride_subsamples_pixels(self):
        depth = np.full((8, 8), 3.0)
        assert len(geom.unproject_frame(_frame(depth), stride=1)) == 64
        assert len(geom.unproject_frame(_frame(depth), stride=4)) == 4
        with pytest.raises(InputError):
            geom.unproject_frame(_frame(depth), stride=0)

    def test_roundtrip_random_points(self):
        # Forward-project random world points with the oracle, then unproject.
        rng = np.random.default_rng(7)
        intr = geom.CameraIntrinsics(fx=380.0, fy=420.0, cx=310.0, cy=245.0)
        pose = random_pose(rng)
        # Points built in camera space with z > 0 so every one is visible.
        cam = np.column_stack(
            [rng.uniform(-2, 2, 50), rng.uniform(-2, 2, 50), rng.uniform(0.5, 4.0, 50)]
        )
        hom = np.concatenate([cam, np.ones((50, 1))], axis=1)
        world = (hom @ pose.world_from_camera().T)[:, :3]
        u, v, d = project_points(world, intr, pose.matrix)
        recovered = geom.unproject_pixels(u, v, d, intr, pose)
        rel = np.abs(recovered - world) / np.maximum(np.abs(world), 1e-12)
        assert rel.max() < 1e-6

    def test_grid_roundtrip_back_to_pixels(self):
        rng = np.random.default_rng(3)
        intr = geom.CameraIntrinsics(fx=50.0, fy=55.0, cx=16.0, cy=12.0)
        pose = random_pose(rng)
        depth = rng.uniform(0.5, 4.0, size=(24, 32))
        frame = _frame(depth, intr=intr, pose=pose)
        ps = geom.unproject_frame(frame, stride=1)
        u, v, d = project_points(ps.points, intr, pose.matrix)
        vs, us = np.meshgrid(np.arange(24), np.arange(32), indexing="ij")
        assert np.abs(u - us.ravel()).max() < 1e-6
        assert np.abs(v - vs.ravel()).max() < 1e-6
        assert np.abs(d - depth.ravel()).max() < 1e-6

    def test_rejects_invalid_maps(self):
        with pytest.raises(InputError):
            _frame(np.full((2, 2), np.nan))
        with pytest.raises(InputError):
            _frame(np.full((2, 2), np.inf))
        with pytest.raises(InputError):
            _frame(-np.ones((2, 2)))
        with pytest.raises(InputError):
            _frame(np.ones((2, 2)), conf=np.full((2, 2), 1.5))
        with pytest.raises(InputError):
            _frame(np.ones((2, 2)), conf=np.ones((3, 3)))

    def test_pose_validation(self):
        bad = np.eye(4)
        bad[0, 1] = 0.1
        with pytest.raises(InputError):
            geom.CameraPose(bad)
        bad2 = np.eye(4)
        bad2[3, 0] = 1.0
        with pytest.raises(InputError):
            geom.CameraPose(bad2)

    def test_intrinsics_validation(self):
        with pytest.raises(InputError):
            geom.CameraIntrinsics(fx=0, fy=1, cx=0, cy=0)
        with pytest.raises(InputError):
            geom.CameraIntrinsics(fx=1, fy=1, cx=np.nan, cy=0)


class TestFilterValid:
    def test_pooled_percentile_example(self):
        # Pooled confidences [0.05, 0.2, 0.6, 0.9]: median 0.4, floor 0.1.
        sets = [
            _point_set([[0, 0, 0], [1, 1, 1]], [0.05, 0.6], frame_id=0),
            _point_set([[2, 2, 2], [3, 3, 3]], [0.2, 0.9], frame_id=1),
        ]
        out = geom.filter_valid(sets, conf_floor=0.1, percentile=50)
        kept = np.concatenate([o.confidences for o in out])
        assert sorted(kept.tolist()) == [0.6, 0.9]
        assert [o.frame_id for o in out] == [0, 1]

    def test_all_confident_keeps_everything(self):
        sets = [_point_set(np.ones((5, 3)), np.ones(5))]
        out = geom.filter_valid(sets)
        assert len(out[0]) == 5

    def test_floor_excludes_everything(self):
        sets = [_point_set(np.ones((4, 3)), np.full(4, 0.05))]
        out = geom.filter_valid(sets)
        assert len(out[0]) == 0

    def test_empty_pool_is_error(self):
        with pytest.raises(EmptySceneError):
            geom.filter_valid([_point_set(np.empty((0, 3)), np.empty(0))])

    def test_matches_manual_predicate(self):
        rng = np.random.default_rng(11)
        sets = [
            _point_set(rng.normal(size=(20, 3)), rng.uniform(0, 1, 20), frame_id=i)
            for i in range(4)
        ]
        floor, pct = 0.15, 60.0
        pooled = np.concatenate([s.confidences for s in sets])
        tau = np.percentile(pooled, pct)
        out = geom.filter_valid(sets, conf_floor=floor, percentile=pct)
        for before, after in zip(sets, out):
            expect = (before.confidences > floor) & (before.confidences >= tau)
            assert np.array_equal(after.points, before.points[expect])
        # Output is always a subset of the input.
        assert sum(len(o) for o in out) <= sum(len(s) for s in sets)

    def test_parameter_validation(self):
        sets = [_point_set(np.ones((2, 3)), [0.5, 0.6])]
        with pytest.raises(InputError):
            geom.filter_valid(sets, conf_floor=1.5)
        with pytest.raises(InputError):
            geom.filter_valid(sets, percentile=120)


class TestSceneBounds:
    def test_two_point_hull(self):
        b = geom.scene_bounds([_point_set([[0, 0, 0], [1, 2, 3]], [1, 1])])
        assert b.min_corner.tolist() == [0, 0, 0]
        assert b.max_corner.tolist() == [1, 2, 3]

    def test_single_point(self):
        b = geom.scene_bounds([_point_set([[2, 3, 4]], [1.0])])
        assert b.min_corner.tolist() == b.max_corner.tolist() == [2, 3, 4]

    def test_matches_fold_oracle(self):
        rng = np.random.default_rng(5)
        pts = rng.normal(size=(100, 3))
        sets = [_point_set(pts[i::4], np.ones(len(pts[i::4])), frame_id=i) for i in range(4)]
        b = geom.scene_bounds(sets)
        lo = np.array([min(p[a] for p in pts) for a in range(3)])
        hi = np.array([max(p[a] for p in pts) for a in range(3)])
        assert np.allclose(b.min_corner, lo)
        assert np.allclose(b.max_corner, hi)

    def test_empty_is_error(self):
        with pytest.raises(EmptySceneError):
            geom.scene_bounds([_point_set(np.empty((0, 3)), np.empty(0))])


class TestVoxelSize:
    def test_direct_formula(self):
        b = geom.SceneBounds([0, 0, 0], [2, 4, 10])
        assert geom.voxel_size(b, lam=20) == pytest.approx(0.1)
        b2 = geom.SceneBounds([0, 0, 0], [1, 1, 1])
        assert geom.voxel_size(b2, lam=20) == pytest.approx(0.05)

    def test_zero_extent_fallback(self):
        b = geom.SceneBounds([0, 0, 0], [0, 3, 5])
        assert geom.voxel_size(b, lam=20) == pytest.approx(0.25)

    def test_degenerate_bounds(self):
        with pytest.raises(DegenerateSceneError):
            geom.voxel_size(geom.SceneBounds([1, 1, 1], [1, 1, 1]))
        with pytest.raises(InputError):
            geom.voxel_size(geom.SceneBounds([0, 0, 0], [1, 1, 1]), lam=0)


class TestVoxelize:
    def test_min_corner_is_origin_cell(self):
        b = geom.SceneBounds([0, 0, 0], [1, 1, 1])
        vs = geom.voxelize(_point_set([[0, 0, 0]], [1.0]), b, 0.5)
        assert vs.voxels == {(0, 0, 0)}

    def test_floor_division_and_dedup(self):
        b = geom.SceneBounds([0, 0, 0], [1, 1, 1])
        ps = _point_set([[0.1, 0.1, 0.1], [0.6, 0.1, 0.1], [0.4, 0.4, 0.4]], [1, 1, 1])
        vs = geom.voxelize(ps, b, 0.5)
        assert vs.voxels == {(0, 0, 0), (1, 0, 0)}

    def test_max_corner_clamps(self):
        b = geom.SceneBounds([0, 0, 0], [1, 1, 1])
        vs = geom.voxelize(_point_set([[1, 1, 1]], [1.0]), b, 0.5)
        assert vs.voxels == {(1, 1, 1)}

    def test_out_of_bounds_error(self):
        b = geom.SceneBounds([0, 0, 0], [1, 1, 1])
        with pytest.raises(OutOfBoundsError):
            geom.voxelize(_point_set([[2, 0, 0]], [1.0]), b, 0.5)

    def test_indices_within_grid(self):
        rng = np.random.default_rng(9)
        pts = rng.uniform(-1, 2, size=(200, 3))
        sets = _point_set(pts, np.ones(200))
        b = geom.scene_bounds([sets])
        delta = geom.voxel_size(b)
        vs = geom.voxelize(sets, b, delta)
        dims = geom.grid_dims(b, delta)
        assert len(vs) <= 200
        for idx in vs.voxels:
            assert all(0 <= idx[a] < dims[a] for a in range(3))

    def test_scale_invariance(self):
        rng = np.random.default_rng(13)
        pts = rng.uniform(0, 1, size=(150, 3))
        base = _point_set(pts, np.ones(150))
        b = geom.scene_bounds([base])
        delta = geom.voxel_size(b)
        # Skip points whose fractional voxel position sits near a boundary,
        # where float rounding may legitimately flip the floor.
        frac = (pts - b.min_corner) / delta
        off_boundary = np.abs(frac - np.round(frac)).min(axis=1) > 1e-6
        pts = pts[off_boundary]
        base = _point_set(pts, np.ones(len(pts)))
        b = geom.scene_bounds([base])
        delta = geom.voxel_size(b)
        ref = geom.voxelize(base, b, delta)
        for s in (0.5, 2.0, 3.7):
            scaled = _point_set(pts * s, np.ones(len(pts)))
            bs = geom.scene_bounds([scaled])
            ds = geom.voxel_size(bs)
            assert ds == pytest.approx(delta * s, rel=1e-12)
            assert geom.voxelize(scaled, bs, ds).voxels == ref.voxels
