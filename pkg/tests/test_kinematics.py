"""Arm model contracts: FK chain, closed-form IK round trips, and grasp base placement."""
import numpy as np
import pytest

from skygrasp.geometry import Pose
from skygrasp.kinematics import (
    ArmModel,
    RobotState,
    base_pose_for_grasp,
    forward_kinematics,
    inverse_kinematics,
    link_frames,
    link_frames_batch,
)

ARM = ArmModel()


def random_joints(rng, arm=ARM, margin=0.02):
    lo = np.array([l for l, _ in arm.joint_limits]) + margin
    hi = np.array([h for _, h in arm.joint_limits]) - margin
    return lo + rng.random(4) * (hi - lo)


class TestForwardKinematics:
    def test_zero_configuration(self):
        # chain: mount 0.12 below base, links 0.10 + 0.15 + 0.15 + 0.08 straight down
        ee = forward_kinematics([0, 0, 0, 0], Pose.identity(), ARM)
        assert np.allclose(ee.translation, [0, 0, -0.60], atol=1e-12)
        assert np.allclose(ee.matrix[:, 0], [0, 0, -1], atol=1e-12)  # approach down
        assert np.allclose(ee.matrix[:, 1], [0, 1, 0], atol=1e-12)  # closing horizontal

    def test_base_translation_translates_end_effector(self):
        rng = np.random.default_rng(0)
        q = random_joints(rng)
        t = np.array([1.5, -2.0, 3.0])
        home = forward_kinematics(q, Pose.identity(), ARM)
        moved = forward_kinematics(q, Pose(t, [1, 0, 0, 0]), ARM)
        assert np.allclose(moved.translation, home.translation + t, atol=1e-12)
        assert np.allclose(moved.matrix, home.matrix, atol=1e-12)

    def test_base_yaw_rotates_end_effector(self):
        rng = np.random.default_rng(1)
        q = random_joints(rng)
        psi = 0.8
        home = forward_kinematics(q, Pose.identity(), ARM)
        yawed = forward_kinematics(q, Pose.from_yaw(psi), ARM)
        rot = Pose.from_yaw(psi).matrix
        assert np.allclose(yawed.translation, rot @ home.translation, atol=1e-9)
        assert np.allclose(yawed.matrix, rot @ home.matrix, atol=1e-9)

    def test_out_of_limit_joints_raise(self):
        with pytest.raises(ValueError):
            forward_kinematics([0, 3.0, 0, 0], Pose.identity(), ARM)

    def test_batched_link_frames_match_single(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            q = random_joints(rng)
            position = rng.normal(size=3)
            yaw = rng.uniform(-np.pi, np.pi)
            origins, rotations = link_frames_batch(position[None], [yaw], q[None], ARM)
            frames = link_frames(q, Pose.from_yaw(yaw, position), ARM)
            for i, frame in enumerate(frames):
                assert np.allclose(origins[0, i], frame.translation, atol=1e-12)
                assert np.allclose(rotations[0, i], frame.matrix, atol=1e-12)


class TestInverseKinematics:
    def test_round_trip_over_random_reachable_targets(self):
        rng = np.random.default_rng(3)
        for _ in range(1000):
            q_true = random_joints(rng)
            target = forward_kinematics(q_true, Pose.identity(), ARM)
            q = inverse_kinematics(target, ARM)
            assert q is not None
            assert ARM.within_limits(q)
            achieved = forward_kinematics(q, Pose.identity(), ARM)
            assert np.linalg.norm(achieved.translation - target.translation) <= 1e-4
            cos_dir = float(achieved.matrix[:, 0] @ target.matrix[:, 0])
            assert np.arccos(np.clip(cos_dir, -1, 1)) <= 1e-3

    def test_beyond_reach_returns_none(self):
        target = Pose.from_matrix(np.eye(3), [ARM.reach + 0.5, 0.0, -0.2])
        assert inverse_kinematics(target, ARM) is None

    def test_target_past_joint_limit_returns_none(self):
        # Swing the shoulder to its limit, then ask for a pose just beyond it.
        lo, hi = ARM.joint_limits[1]
        q_limit = np.array([0.0, hi, 0.0, 0.0])
        at_limit = forward_kinematics(q_limit, Pose.identity(), ARM)
        # rotate the approach a bit further in the same sweep direction
        overshoot = 0.15
        theta = hi + overshoot
        l2, l3, l4 = ARM.link_lengths[1:]
        reach = l2 + l3 + l4
        position = np.array(
            [reach * np.sin(theta), 0.0, -ARM.mount_offset - ARM.link_lengths[0] - reach * np.cos(theta)]
        )
        approach = np.array([np.sin(theta), 0.0, -np.cos(theta)])
        closing = np.array([0.0, 1.0, 0.0])
        rot = np.column_stack([approach, closing, np.cross(approach, closing)])
        assert inverse_kinematics(Pose.from_matrix(rot, position), ARM) is None

    def test_out_of_plane_approach_returns_none(self):
        # Position along +x but approach pointing sideways (+y): not realizable.
        rot = np.column_stack([[0, 1, 0], [0, 0, 1], [1, 0, 0]])
        target = Pose.from_matrix(np.array(rot, dtype=float), [0.2, 0.0, -0.45])
        assert inverse_kinematics(target, ARM) is None


class TestBasePoseForGrasp:
    def test_top_down_grasp_reaches_with_fk_verification(self):
        rot = np.column_stack([[0, 0, -1], [0, 1, 0], [1, 0, 0]]).astype(float)
        state = base_pose_for_grasp([0.4, -0.3, 0.5], rot, ARM)
        assert state is not None
        ee = forward_kinematics(state.q, state.base, ARM)
        assert np.linalg.norm(ee.translation - [0.4, -0.3, 0.5]) <= 1e-4
        assert np.allclose(ee.matrix[:, 0], [0, 0, -1], atol=1e-3)

    def test_horizontal_approach_sets_base_yaw(self):
        rot = np.eye(3)  # approach +x, closing +y
        state = base_pose_for_grasp([1.0, 0.0, 0.5], rot, ARM)
        assert state is not None
        assert abs(state.base.yaw) <= 1e-6

    def test_unreachable_grasp_below_ground(self):
        rot = np.column_stack([[0, 0, -1], [0, 1, 0], [1, 0, 0]]).astype(float)
        assert base_pose_for_grasp([0.0, 0.0, -10.0], rot, ARM) is None

    def test_base_is_always_hovering(self):
        rng = np.random.default_rng(4)
        found = 0
        for _ in range(50):
            direction = rng.normal(size=3)
            direction /= np.linalg.norm(direction)
            if direction[2] > 0.3:
                direction = -direction
            closing = np.cross(direction, [0.0, 0.0, 1.0])
            if np.linalg.norm(closing) < 1e-6:
                closing = np.array([0.0, 1.0, 0.0])
            closing /= np.linalg.norm(closing)
            rot = np.column_stack([direction, closing, np.cross(direction, closing)])
            state = base_pose_for_grasp(rng.uniform(-1, 1, 3) + [0, 0, 1.2], rot, ARM)
            if state is None:
                continue
            found += 1
            q = state.base.rotation
            assert abs(q[1]) < 1e-9 and abs(q[2]) < 1e-9
        assert found > 10


class TestRobotState:
    def test_rejects_tilted_base(self):
        tilted = Pose(np.zeros(3), np.array([np.cos(0.1), np.sin(0.1), 0.0, 0.0]))
        with pytest.raises(ValueError):
            RobotState(tilted, np.zeros(4))

    def test_hover_constructor(self):
        state = RobotState.hover([1, 2, 3], 0.5, ARM.rest_config)
        assert np.isclose(state.base.yaw, 0.5)
