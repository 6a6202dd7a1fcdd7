"""Forward/inverse kinematics for the 4-DoF (yaw + 3 parallel pitch) arm under a hovering base.

Chain layout, in the vehicle base frame (x forward, y left, z up):
  * the arm mounts `mount_offset` below the base center
  * joint 1 yaws the arm's vertical work plane about the downward axis
  * joints 2-4 pitch about the plane normal; at q = 0 the arm hangs straight down
  * the end-effector approach axis is the last link direction, its closing axis
    is the work-plane normal (the gripper cannot roll)

With default link lengths (0.10, 0.15, 0.15, 0.08) and mount offset 0.12 the
zero-configuration end effector sits at (0, 0, -0.60) in the base frame with
the approach axis pointing straight down.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose

# Maps the pitch-link frame (x along the link) onto the chain frame whose -z is
# the link direction: columns are the link frame axes expressed in chain axes.
_LINK_AXES = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]])

IK_POSITION_TOL = 1e-4
IK_DIRECTION_TOL = 1e-3


@dataclass(frozen=True)
class ArmModel:
    """Geometry and limits of the serial arm plus its mounting under the vehicle."""

    link_lengths: tuple[float, float, float, float] = (0.10, 0.15, 0.15, 0.08)
    joint_limits: tuple[tuple[float, float], ...] = (
        (-np.pi, np.pi),
        (np.deg2rad(-120.0), np.deg2rad(120.0)),
        (np.deg2rad(-135.0), np.deg2rad(135.0)),
        (np.deg2rad(-135.0), np.deg2rad(135.0)),
    )
    mount_offset: float = 0.12  # drop from base center to the arm mount, meters
    rest_config: tuple[float, float, float, float] = (0.0, 1.2, -2.2, 1.0)
    standoff: float = 0.0

    def __post_init__(self):
        if len(self.link_lengths) != 4 or len(self.joint_limits) != 4:
            raise ValueError("arm model needs 4 link lengths and 4 joint limit pairs")
        for lo, hi in self.joint_limits:
            if not lo < hi:
                raise ValueError("joint limits must satisfy min < max")
        if min(self.link_lengths) <= 0:
            raise ValueError("link lengths must be positive")

    @property
    def reach(self) -> float:
        return float(sum(self.link_lengths[1:]))

    def within_limits(self, q, slack: float = 1e-9) -> bool:
        q = np.asarray(q, dtype=np.float64)
        for value, (lo, hi) in zip(q, self.joint_limits):
            if value < lo - slack or value > hi + slack:
                return False
        return True

    def clamp_to_limits(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=np.float64)
        lo = np.array([l for l, _ in self.joint_limits])
        hi = np.array([h for _, h in self.joint_limits])
        return np.clip(q, lo, hi)


@dataclass(frozen=True)
class RobotState:
    """Hovering base pose plus the 4-joint arm configuration."""

    base: Pose
    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=np.float64).reshape(4)
        q.setflags(write=False)
        object.__setattr__(self, "q", q)
        rot = self.base.rotation
        if abs(rot[1]) > 1e-9 or abs(rot[2]) > 1e-9:
            raise ValueError("base pose must have zero roll and pitch (hover constraint)")

    @staticmethod
    def hover(position, yaw: float, q) -> "RobotState":
        return RobotState(Pose.from_yaw(yaw, position), np.asarray(q, dtype=np.float64))


def _wrap_angle(angle: float) -> float:
    return float(np.arctan2(np.sin(angle), np.cos(angle)))


def link_frames(q, base: Pose, arm: ArmModel) -> list[Pose]:
    """World poses of the four link frames plus the end-effector frame.

    Each link frame has its origin at the link's proximal joint and its x axis
    along the link; the final entry is the end-effector frame whose x axis is
    the approach direction and y axis the closing direction.
    """
    q = np.asarray(q, dtype=np.float64).reshape(4)
    l1, l2, l3, l4 = arm.link_lengths

    mount = Pose(np.array([0.0, 0.0, -arm.mount_offset]), np.array([1.0, 0.0, 0.0, 0.0]))
    yawed = Pose.from_yaw(-q[0])
    t1 = base.compose(mount).compose(yawed)

    frames = [t1.compose(Pose.from_matrix(_LINK_AXES, np.zeros(3)))]
    chain = t1.compose(Pose(np.array([0.0, 0.0, -l1]), np.array([1.0, 0.0, 0.0, 0.0])))
    lengths = (l2, l3, l4)
    for pitch, length in zip(q[1:], lengths):
        half = 0.5 * (-pitch)
        rot_y = Pose(np.zeros(3), np.array([np.cos(half), 0.0, np.sin(half), 0.0]))
        chain = chain.compose(rot_y)
        frames.append(chain.compose(Pose.from_matrix(_LINK_AXES, np.zeros(3))))
        chain = chain.compose(Pose(np.array([0.0, 0.0, -length]), np.array([1.0, 0.0, 0.0, 0.0])))

    frames.append(chain.compose(Pose.from_matrix(_LINK_AXES, np.zeros(3))))
    return frames


def forward_kinematics(q, base: Pose, arm: ArmModel) -> Pose:
    """World end-effector pose for joint vector q; raises on out-of-limit joints."""
    q = np.asarray(q, dtype=np.float64).reshape(4)
    if not arm.within_limits(q):
        raise ValueError(f"joint vector outside limits: {q}")
    return link_frames(q, base, arm)[-1]


def _planar_candidates(r: float, d: float, theta_a: float, arm: ArmModel):
    """Planar 3R solutions reaching in-plane point (r, d) with terminal angle theta_a.

    Coordinates are measured from the shoulder: r along the work-plane radial
    direction, d straight down; angles are measured from straight down.
    """
    _, l2, l3, l4 = arm.link_lengths
    wr = r - l4 * np.sin(theta_a)
    wd = d - l4 * np.cos(theta_a)
    dist_sq = wr * wr + wd * wd
    cos_q3 = (dist_sq - l2 * l2 - l3 * l3) / (2.0 * l2 * l3)
    if cos_q3 < -1.0 - 1e-9 or cos_q3 > 1.0 + 1e-9:
        return []
    cos_q3 = float(np.clip(cos_q3, -1.0, 1.0))
    q3_mag = float(np.arccos(cos_q3))
    solutions = []
    for q3 in (q3_mag, -q3_mag):  # positive-elbow branch preferred, then the mirror
        q2 = float(np.arctan2(wr, wd) - np.arctan2(l3 * np.sin(q3), l2 + l3 * np.cos(q3)))
        q4 = _wrap_angle(theta_a - q2 - q3)
        solutions.append((_wrap_angle(q2), _wrap_angle(q3), q4))
    return solutions


def _fk_base_frame(q, arm: ArmModel) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form end-effector position and approach direction in the base frame."""
    import math

    l1, l2, l3, l4 = arm.link_lengths
    q1, q2, q3, q4 = (float(v) for v in q)
    t2 = q2
    t3 = q2 + q3
    t4 = q2 + q3 + q4
    r = l2 * math.sin(t2) + l3 * math.sin(t3) + l4 * math.sin(t4)
    drop = l1 + l2 * math.cos(t2) + l3 * math.cos(t3) + l4 * math.cos(t4)
    cos1, sin1 = math.cos(q1), math.sin(q1)
    position = np.array([r * cos1, -r * sin1, -arm.mount_offset - drop])
    sin4, cos4 = math.sin(t4), math.cos(t4)
    approach = np.array([sin4 * cos1, -sin4 * sin1, -cos4])
    return position, approach


def inverse_kinematics(ee_target_in_base: Pose, arm: ArmModel) -> np.ndarray | None:
    """Solve for joints reaching the target position and approach direction.

    The task space is full position plus the approach-axis direction; gripper
    roll about the approach axis is not controlled. Returns None when the
    target is unreachable, outside joint limits, or its approach direction
    cannot lie in the arm's work plane.
    """
    l1 = arm.link_lengths[0]
    p = ee_target_in_base.translation
    approach = ee_target_in_base.matrix[:, 0]

    rel = p - np.array([0.0, 0.0, -arm.mount_offset])
    horiz = rel[:2]
    if np.linalg.norm(horiz) > 1e-9:
        q1 = float(np.arctan2(-horiz[1], horiz[0]))
    elif np.linalg.norm(approach[:2]) > 1e-9:
        q1 = float(np.arctan2(-approach[1], approach[0]))
    else:
        q1 = 0.0

    e_r = np.array([np.cos(q1), -np.sin(q1), 0.0])
    e_y = np.array([np.sin(q1), np.cos(q1), 0.0])
    e_d = np.array([0.0, 0.0, -1.0])

    # Approach must lie in the work plane spanned by e_r and e_d.
    if abs(float(approach @ e_y)) > IK_DIRECTION_TOL:
        return None

    r = float(rel @ e_r)
    d = float(rel @ e_d) - l1
    theta_a = float(np.arctan2(approach @ e_r, approach @ e_d))

    for q2, q3, q4 in _planar_candidates(r, d, theta_a, arm):
        q = np.array([_wrap_angle(q1), q2, q3, q4])
        if not arm.within_limits(q):
            continue
        pos, direction = _fk_base_frame(q, arm)
        pos_err = float(np.linalg.norm(pos - p))
        dir_err = float(np.arccos(np.clip(direction @ approach, -1.0, 1.0)))
        if pos_err <= IK_POSITION_TOL and dir_err <= IK_DIRECTION_TOL:
            return q
    return None


def _nominal_ee_point(theta_a: float, arm: ArmModel) -> np.ndarray:
    """Comfortable end-effector placement in the base frame for a given in-plane approach angle.

    Blends from a mostly-below placement for top-down approaches to an extended
    forward placement for horizontal approaches so the base can stay clear of
    shelf-like structures.
    """
    blend = float(np.clip(abs(theta_a) / (0.5 * np.pi), 0.0, 1.0))
    forward = 0.15 + 0.13 * blend
    drop = arm.mount_offset + 0.28 + 0.12 * (1.0 - blend)
    return np.array([forward, 0.0, -drop])


def base_pose_for_grasp(grasp_translation, grasp_rotation_matrix, arm: ArmModel,
                        standoff: float | None = None,
                        min_base_z: float = 0.0) -> RobotState | None:
    """Hover base pose plus joint vector that places the gripper at the grasp.

    The base keeps zero roll/pitch with its yaw facing the horizontal
    projection of the grasp approach axis (falling back to aligning the
    closing axis for vertical approaches). Returns None when no in-limit
    joint solution reaches the grasp or when reaching it would push the base
    below `min_base_z`.
    """
    if standoff is None:
        standoff = arm.standoff
    t_g = np.asarray(grasp_translation, dtype=np.float64)
    rot = np.asarray(grasp_rotation_matrix, dtype=np.float64)
    approach = rot[:, 0]
    closing = rot[:, 1]

    if np.linalg.norm(approach[:2]) > 1e-9:
        yaw = float(np.arctan2(approach[1], approach[0]))
    else:
        yaw = float(np.arctan2(-closing[0], closing[1]))

    base_rot = Pose.from_yaw(yaw)
    target_point = t_g - standoff * approach
    approach_in_base = base_rot.inverse().matrix @ approach
    theta_a = float(np.arctan2(approach_in_base[0], -approach_in_base[2]))

    ee_point = _nominal_ee_point(theta_a, arm)
    base_position = target_point - base_rot.matrix @ ee_point
    if base_position[2] < min_base_z:
        return None
    base = Pose.from_yaw(yaw, base_position)

    ee_in_base = base.inverse().compose(Pose.from_matrix(rot, target_point))
    q = inverse_kinematics(ee_in_base, arm)
    if q is None:
        return None
    return RobotState(base, q)


# ---------------------------------------------------------------------------
# batched link placement for hovering bases (used by the collision engine)
# ---------------------------------------------------------------------------

def link_frames_batch(positions, yaws, joints, arm: ArmModel):
    """Vectorized link frames for M hovering states.

    Args:
        positions: (M, 3) base positions.
        yaws: (M,) base yaw angles.
        joints: (M, 4) joint vectors.

    Returns:
        origins: (M, 5, 3) link origins (4 links + end effector).
        rotations: (M, 5, 3, 3) frame rotations with x along each link and the
            final entry being the end-effector frame.
    """
    positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
    yaws = np.asarray(yaws, dtype=np.float64).reshape(-1)
    joints = np.asarray(joints, dtype=np.float64).reshape(-1, 4)
    m = positions.shape[0]
    l1, l2, l3, l4 = arm.link_lengths

    alpha = yaws - joints[:, 0]  # world azimuth of the work-plane radial axis
    e_r = np.column_stack([np.cos(alpha), np.sin(alpha), np.zeros(m)])
    e_y = np.column_stack([-np.sin(alpha), np.cos(alpha), np.zeros(m)])
    e_d = np.broadcast_to(np.array([0.0, 0.0, -1.0]), (m, 3))

    theta2 = joints[:, 1]
    theta3 = joints[:, 1] + joints[:, 2]
    theta4 = joints[:, 1] + joints[:, 2] + joints[:, 3]

    def in_plane_dir(theta):
        return np.sin(theta)[:, None] * e_r + np.cos(theta)[:, None] * e_d

    dir1 = e_d.copy()
    dir2 = in_plane_dir(theta2)
    dir3 = in_plane_dir(theta3)
    dir4 = in_plane_dir(theta4)

    o1 = positions + np.array([0.0, 0.0, -arm.mount_offset])
    o2 = o1 + l1 * dir1
    o3 = o2 + l2 * dir2
    o4 = o3 + l3 * dir3
    ee = o4 + l4 * dir4

    origins = np.stack([o1, o2, o3, o4, ee], axis=1)
    dirs = np.stack([dir1, dir2, dir3, dir4, dir4], axis=1)
    plane_normals = np.broadcast_to(e_y[:, None, :], dirs.shape)
    z_axes = np.cross(dirs, plane_normals)
    rotations = np.stack([dirs, plane_normals, z_axes], axis=-1)
    return origins, rotations
