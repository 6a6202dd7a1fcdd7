"""Antipodal sampler geometry, the gravity cone, and stability-weighted ranking."""
import numpy as np
import pytest

from skygrasp.geometry import PointCloud, quat_from_matrix
from skygrasp.grasping import (
    GraspCandidate,
    GraspConfig,
    best_antipodal_pair,
    build_feasible_set,
    gravity_filter,
    sample_candidates,
    stability_score,
)

GRAVITY = np.array([0.0, 0.0, -1.0])


def sphere_cloud(radius=0.05, n=400, seed=0):
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(n, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return PointCloud(dirs * radius)


def plate_cloud(gap=0.04, n_side=15):
    xs = np.linspace(-0.04, 0.04, n_side)
    zs = np.linspace(0.0, 0.08, n_side)
    grid = np.array([[x, 0.0, z] for x in xs for z in zs])
    left = grid + np.array([0.0, -gap / 2, 0.0])
    right = grid + np.array([0.0, gap / 2, 0.0])
    return PointCloud(np.vstack([left, right]))


def candidate_with_approach(direction, score=0.8, translation=(0, 0, 0)):
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    helper = np.array([0.0, 0.0, 1.0]) if abs(direction[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    closing = np.cross(direction, helper)
    closing /= np.linalg.norm(closing)
    rot = np.column_stack([direction, closing, np.cross(direction, closing)])
    return GraspCandidate(np.asarray(translation, float), quat_from_matrix(rot), 0.04, score)


class TestSampleCandidates:
    def test_sphere_candidates_pass_near_center(self):
        # gripper wide enough to span the sphere, so pairs are near-diametric
        cloud = sphere_cloud()
        candidates = sample_candidates(cloud, 32, rng_seed=1, config=GraspConfig(w_max=0.12))
        assert len(candidates) == 32
        for cand in candidates:
            assert np.linalg.norm(cand.translation) < 0.01

    def test_parallel_plates_width_and_closing_axis(self):
        cloud = plate_cloud(gap=0.04)
        candidates = sample_candidates(cloud, 16, rng_seed=2)
        for cand in candidates:
            assert 0.04 - 1e-6 <= cand.width <= 0.04 + 0.01
            # closing axis perpendicular to the plates within 10 degrees
            cos_angle = abs(float(cand.closing_axis @ np.array([0.0, 1.0, 0.0])))
            assert cos_angle >= np.cos(np.deg2rad(10.0))

    def test_exact_count_contract(self):
        assert len(sample_candidates(sphere_cloud(), 1, rng_seed=3)) == 1

    def test_too_few_points_raise(self):
        with pytest.raises(ValueError):
            sample_candidates(PointCloud(np.zeros((5, 3)) + np.eye(3)[0]), 4, 0)

    def test_deterministic_per_seed(self):
        cloud = sphere_cloud()
        a = sample_candidates(cloud, 8, rng_seed=9)
        b = sample_candidates(cloud, 8, rng_seed=9)
        for x, y in zip(a, b):
            assert np.array_equal(x.translation, y.translation)
            assert np.array_equal(x.rotation, y.rotation)
            assert x.width == y.width and x.score == y.score
        c = sample_candidates(cloud, 8, rng_seed=10)
        assert any(not np.array_equal(x.translation, y.translation) for x, y in zip(a, c))

    def test_approach_always_perpendicular_to_closing(self):
        for cand in sample_candidates(sphere_cloud(seed=4), 24, rng_seed=5):
            assert abs(float(cand.approach_axis @ cand.closing_axis)) < 1e-9


class TestGravityFilter:
    def test_straight_down_retained(self):
        kept = gravity_filter([candidate_with_approach([0, 0, -1])], GRAVITY, np.deg2rad(100))
        assert len(kept) == 1

    def test_straight_up_discarded(self):
        kept = gravity_filter([candidate_with_approach([0, 0, 1])], GRAVITY, np.deg2rad(100))
        assert kept == []

    def test_horizontal_boundary_inclusive(self):
        kept = gravity_filter([candidate_with_approach([1, 0, 0])], GRAVITY, np.deg2rad(100))
        assert len(kept) == 1
        # and exactly at the cone edge
        edge = candidate_with_approach([np.sin(np.deg2rad(100)), 0, np.cos(np.deg2rad(100))])
        assert len(gravity_filter([edge], GRAVITY, np.deg2rad(100))) == 1

    def test_idempotent(self):
        candidates = [
            candidate_with_approach(d)
            for d in ([0, 0, -1], [1, 0, 0], [0.2, 0.3, 0.5], [0, 1, 0.4])
        ]
        once = gravity_filter(candidates, GRAVITY, np.deg2rad(100))
        twice = gravity_filter(once, GRAVITY, np.deg2rad(100))
        assert once == twice


class TestStabilityScore:
    def test_zero_distance_keeps_score(self):
        assert stability_score(0.7, [1, 2, 3], [1, 2, 3], alpha=1.5) == 0.7

    def test_zero_alpha_keeps_score(self):
        assert stability_score(0.7, [9, 9, 9], [0, 0, 0], alpha=0.0) == 0.7

    def test_half_life_example(self):
        value = stability_score(0.8, [np.log(2) / 2, 0, 0], [0, 0, 0], alpha=2.0)
        assert np.isclose(value, 0.4, rtol=1e-9)

    def test_monotone_in_distance(self):
        distances = np.linspace(0, 1, 20)
        values = [stability_score(0.9, [d, 0, 0], [0, 0, 0], alpha=1.5) for d in distances]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_never_exceeds_raw_score(self):
        rng = np.random.default_rng(6)
        for _ in range(100):
            s = rng.uniform(0, 1)
            t = rng.normal(size=3)
            c = rng.normal(size=3)
            assert stability_score(s, t, c, alpha=rng.uniform(0, 3)) <= s


class TestBuildFeasibleSet:
    def test_all_upward_approaches_filtered_to_empty(self):
        candidates = [candidate_with_approach([0, 0, 1], score=0.9)]
        kept = gravity_filter(candidates, GRAVITY, np.deg2rad(100))
        assert kept == []

    def test_centroid_grasp_ranks_first(self):
        # equal raw scores: the grasp at the centroid must outrank the offset one
        near = candidate_with_approach([0, 0, -1], score=0.8, translation=[0, 0, 0])
        far = candidate_with_approach([0, 0, -1], score=0.8, translation=[0.1, 0, 0])
        ranked = sorted(
            [
                (stability_score(c.score, c.translation, [0, 0, 0], 1.0), i)
                for i, c in enumerate([far, near])
            ],
            reverse=True,
        )
        assert ranked[0][1] == 1

    def test_set_members_all_pass_gravity_filter(self):
        cloud = sphere_cloud(seed=7)
        config = GraspConfig(n_candidates=64)
        feasible = build_feasible_set(cloud, GRAVITY, config, rng_seed=11)
        assert len(feasible) <= 64
        cone = np.cos(np.deg2rad(config.gravity_cone_deg))
        for cand in feasible.candidates:
            assert float(cand.approach_axis @ GRAVITY) >= cone - 1e-9
            assert cand.stability_score <= cand.score

    def test_ordering_descending_with_row_major_ties(self):
        cloud = sphere_cloud(seed=8)
        feasible = build_feasible_set(cloud, GRAVITY, GraspConfig(n_candidates=48), rng_seed=12)
        scores = [c.stability_score for c in feasible.candidates]
        assert all(a >= b for a, b in zip(scores, scores[1:]))
        for a, b in zip(feasible.candidates, feasible.candidates[1:]):
            if a.stability_score == b.stability_score:
                assert a.pixel_anchor <= b.pixel_anchor

    def test_ranking_invariant_under_score_scaling(self):
        cloud = sphere_cloud(seed=9)
        feasible = build_feasible_set(cloud, GRAVITY, GraspConfig(n_candidates=32), rng_seed=13)
        order = [tuple(c.translation) for c in feasible.candidates]
        rescored = sorted(
            feasible.candidates,
            key=lambda c: (-3.7 * c.stability_score, c.pixel_anchor[0], c.pixel_anchor[1]),
        )
        assert [tuple(c.translation) for c in rescored] == order

    def test_determinism_bit_for_bit(self):
        cloud = sphere_cloud(seed=10)
        a = build_feasible_set(cloud, GRAVITY, GraspConfig(), rng_seed=14)
        b = build_feasible_set(cloud, GRAVITY, GraspConfig(), rng_seed=14)
        assert len(a) == len(b)
        for x, y in zip(a.candidates, b.candidates):
            assert np.array_equal(x.translation, y.translation)
            assert np.array_equal(x.rotation, y.rotation)
            assert x.stability_score == y.stability_score


class TestBestAntipodalPair:
    def test_sphere_best_pair_is_diametric(self):
        cloud = sphere_cloud(n=300, seed=11)
        anchor, partner, score = best_antipodal_pair(cloud.points, w_max=0.12)
        midpoint = 0.5 * (cloud.points[anchor] + cloud.points[partner])
        assert np.linalg.norm(midpoint) < 0.005
        assert score > 0.98

    def test_no_pair_within_gripper_returns_none(self):
        # points pairwise farther apart than the gripper can open
        cloud = sphere_cloud(radius=5.0, n=12, seed=12)
        assert best_antipodal_pair(cloud.points, w_max=0.1) is None
