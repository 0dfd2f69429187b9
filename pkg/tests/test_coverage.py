"""Coverage selection tests: greedy vs. exhaustive oracle, subsampling,
and the end-to-end frame pipeline."""

import math

import numpy as np
import pytest

from voxcover import coverage, geom
from voxcover.errors import EmptyInstanceError, InputError, InstanceTooLargeError

from helpers import orbit_scene, static_pan_scene


def _vs(frame_id, voxels):
    return geom.FrameVoxelSet(frame_id=frame_id, voxels=frozenset(voxels))


def _instance(sets, k):
    return coverage.CoverageInstance(
        frame_sets=tuple(_vs(i, s) for i, s in enumerate(sets)), k=k
    )


def _random_instance(rng, max_sets=12, max_voxels=30, max_k=4):
    n = int(rng.integers(2, max_sets + 1))
    universe = [(int(v), 0, 0) for v in range(max_voxels)]
    sets = []
    for _ in range(n):
        size = int(rng.integers(1, max_voxels + 1))
        members = rng.choice(len(universe), size=size, replace=False)
        sets.append({universe[m] for m in members})
    k = int(rng.integers(1, min(max_k, n) + 1))
    return _instance(sets, k)


class TestUniformSubsample:
    def test_examples(self):
        assert coverage.uniform_subsample(8, 4) == [0, 2, 4, 6]
        assert coverage.uniform_subsample(5, 5) == [0, 1, 2, 3, 4]

    def test_large_sequence(self):
        idx = coverage.uniform_subsample(2000, 128)
        assert len(idx) == 128
        assert idx[0] == 0 and idx[-1] == 1984
        assert all(b > a for a, b in zip(idx, idx[1:]))

    def test_m_exceeding_total_is_error(self):
        with pytest.raises(InputError):
            coverage.uniform_subsample(4, 5)


class TestGreedySelect:
    def test_dominant_set(self):
        inst = _instance([{(0, 0, 0), (1, 0, 0), (2, 0, 0)}, {(0, 0, 0)}], k=1)
        res = coverage.greedy_select(inst)
        assert res.selected_ids == (0,)
        assert res.per_step_gain == (3,)
        assert res.covered_count == 3
        assert not res.early_stop

    def test_hand_simulated_example(self):
        # A={1,2,3}, B={1,2}, C={3,4}: greedy takes A (gain 3) then C (gain 1).
        a = {(1, 0, 0), (2, 0, 0), (3, 0, 0)}
        b = {(1, 0, 0), (2, 0, 0)}
        c = {(3, 0, 0), (4, 0, 0)}
        res = coverage.greedy_select(_instance([a, b, c], k=2))
        assert res.selected_ids == (0, 2)
        assert res.per_step_gain == (3, 1)
        assert res.covered_count == 4

    def test_tie_breaks_by_lowest_id(self):
        s = {(0, 0, 0), (1, 0, 0)}
        res = coverage.greedy_select(_instance([s, set(s)], k=1))
        assert res.selected_ids == (0,)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(21)
        inst = _random_instance(rng)
        baseline = coverage.greedy_select(inst)
        for _ in range(5):
            perm = rng.permutation(len(inst.frame_sets))
            shuffled = coverage.CoverageInstance(
                frame_sets=tuple(inst.frame_sets[int(i)] for i in perm), k=inst.k
            )
            assert coverage.greedy_select(shuffled) == baseline

    def test_gains_positive_and_non_increasing(self):
        rng = np.random.default_rng(33)
        for _ in range(50):
            res = coverage.greedy_select(_random_instance(rng))
            assert all(g > 0 for g in res.per_step_gain)
            assert all(a >= b for a, b in zip(res.per_step_gain, res.per_step_gain[1:]))
            assert res.covered_count == sum(res.per_step_gain)

    def test_early_stop_on_zero_gain(self):
        s = {(0, 0, 0)}
        res = coverage.greedy_select(_instance([s, set(s), set(s)], k=3))
        assert res.selected_ids == (0,)
        assert res.early_stop

    def test_empty_instance_error(self):
        with pytest.raises(EmptyInstanceError):
            coverage.CoverageInstance(frame_sets=(), k=1)
        with pytest.raises(InputError):
            _instance([{(0, 0, 0)}], k=2)


class TestExhaustiveSelect:
    def test_k_equals_n_covers_union(self):
        sets = [{(0, 0, 0)}, {(1, 0, 0)}, {(1, 0, 0), (2, 0, 0)}]
        res = coverage.exhaustive_select(_instance(sets, k=3))
        assert res.covered_count == 3

    def test_disjoint_tie_rule(self):
        sets = [{(i, 0, 0), (i, 1, 0)} for i in range(4)]
        res = coverage.exhaustive_select(_instance(sets, k=2))
        assert sorted(res.selected_ids) == [0, 1]
        assert res.covered_count == 4

    def test_hand_enumerated_example(self):
        a = {(1, 0, 0), (2, 0, 0), (3, 0, 0)}
        b = {(1, 0, 0), (2, 0, 0)}
        c = {(3, 0, 0), (4, 0, 0)}
        res = coverage.exhaustive_select(_instance([a, b, c], k=2))
        assert sorted(res.selected_ids) == [0, 2]
        assert res.covered_count == 4

    def test_guard(self):
        sets = [{(i, 0, 0)} for i in range(60)]
        with pytest.raises(InstanceTooLargeError):
            coverage.exhaustive_select(_instance(sets, k=30))


class TestGreedyVsExhaustive:
    def test_approximation_bound_random(self):
        rng = np.random.default_rng(99)
        bound = 1.0 - 1.0 / math.e
        exact = 0
        for _ in range(60):
            inst = _random_instance(rng)
            greedy = coverage.greedy_select(inst).covered_count
            optimal = coverage.exhaustive_select(inst).covered_count
            assert greedy >= math.ceil(bound * optimal)
            assert greedy <= optimal
            exact += greedy == optimal
        assert exact >= 36  # ~60% on random instances

    def test_exact_when_k_is_one(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            inst = _random_instance(rng, max_k=1)
            one = coverage.CoverageInstance(frame_sets=inst.frame_sets, k=1)
            assert (
                coverage.greedy_select(one).covered_count
                == coverage.exhaustive_select(one).covered_count
            )

    def test_exact_for_disjoint_sets(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            n = int(rng.integers(3, 8))
            sets = []
            v = 0
            for _ in range(n):
                size = int(rng.integers(1, 6))
                sets.append({(v + j, 0, 0) for j in range(size)})
                v += size
            k = int(rng.integers(1, n + 1))
            inst = _instance(sets, k)
            assert (
                coverage.greedy_select(inst).covered_count
                == coverage.exhaustive_select(inst).covered_count
            )

    def test_greedy_at_least_best_single_set(self):
        rng = np.random.default_rng(71)
        for _ in range(20):
            inst = _random_instance(rng)
            best_single = max(len(fs.voxels) for fs in inst.frame_sets)
            assert coverage.greedy_select(inst).covered_count >= best_single


class TestSelectFrames:
    def test_all_frames_selected_when_k_is_count(self):
        frames = orbit_scene(n_frames=6, seed=1)
        res = coverage.select_frames(frames, k=6, stride=4)
        assert set(res.selected_ids) <= set(range(6))
        # Either everything is picked or the rest add no coverage.
        assert len(res.selected_ids) == 6 or res.early_stop

    def test_static_camera_early_stop(self):
        frames = static_pan_scene(n_frames=8, static_fraction=1.0, seed=0)
        res = coverage.select_frames(frames, k=4, stride=4)
        assert res.selected_ids == (0,)
        assert res.early_stop

    def test_beats_uniform_baseline_on_orbit(self):
        frames = orbit_scene(n_frames=32, seed=2)
        scene = coverage.voxelize_frames(frames, stride=4)
        greedy = coverage.greedy_select(
            coverage.CoverageInstance(frame_sets=scene.frame_sets, k=8)
        ).covered_count
        uniform_ids = set(coverage.uniform_subsample(32, 8))
        uniform_cov = len(
            set().union(*(fs.voxels for fs in scene.frame_sets if fs.frame_id in uniform_ids))
        )
        assert greedy >= uniform_cov

    def test_never_recomputes_voxel_sets(self):
        frames = orbit_scene(n_frames=8, seed=3)
        scene = coverage.voxelize_frames(frames, stride=4)
        res1 = coverage.greedy_select(
            coverage.CoverageInstance(frame_sets=scene.frame_sets, k=4)
        )
        res2 = coverage.select_frames(frames, k=4, stride=4)
        assert res1 == res2

    def test_k_exceeding_frames_is_error(self):
        frames = orbit_scene(n_frames=4, seed=0)
        with pytest.raises(InputError):
            coverage.select_frames(frames, k=5)
