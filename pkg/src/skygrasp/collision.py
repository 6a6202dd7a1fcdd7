"""Trajectory discretization and two-stage full-body collision scoring.

For each grasp candidate the robot's straight-line approach is discretized
into waypoints; a conservative per-waypoint bounding sphere queried against a
KD-tree certifies empty regions, and only the surviving local point subsets
are tested exactly against the robot's convex hulls via half-space products.
The per-trajectory penetration count then discounts the candidate's visual
score into an execution score.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import HULL_EPS, ConvexHull, PointCloud, Pose, SpatialIndex, box_hull, transform_hull
from .grasping import FeasibleGraspSet, GraspCandidate
from .kinematics import ArmModel, RobotState, base_pose_for_grasp, link_frames_batch

_RADIUS_MARGIN = 1e-6  # slack added to the conservative sphere radius


@dataclass(frozen=True)
class CollisionConfig:
    waypoints: int = 20  # trajectory discretization S
    penalty_scale: float = 0.02  # per-point score penalty (lambda)
    target_exclusion_m: float = 0.12  # radius around the object centroid cleared from the scene cloud

    def to_dict(self) -> dict:
        return {
            "waypoints": self.waypoints,
            "penalty_scale": self.penalty_scale,
            "target_exclusion_m": self.target_exclusion_m,
        }


@dataclass(frozen=True)
class Trajectory:
    """S interpolated robot states from the current state to a grasp target."""

    positions: np.ndarray  # (S, 3) base positions
    yaws: np.ndarray  # (S,)
    joints: np.ndarray  # (S, 4)

    def __post_init__(self):
        for name in ("positions", "yaws", "joints"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.positions.shape[0]

    def state(self, index: int) -> RobotState:
        return RobotState.hover(self.positions[index], float(self.yaws[index]), self.joints[index])


@dataclass(frozen=True)
class RobotHullModel:
    """Convex decomposition of the vehicle: body hulls in the base frame and
    one hull per arm link in its link frame (x along the link)."""

    body_hulls: tuple[ConvexHull, ...]
    link_hulls: tuple[ConvexHull, ConvexHull, ConvexHull, ConvexHull]


def default_robot_hulls(arm: ArmModel | None = None) -> RobotHullModel:
    """Fuselage box, rotor-plane slab, and slender boxes along each arm link."""
    if arm is None:
        arm = ArmModel()
    l1, l2, l3, l4 = arm.link_lengths
    body = (
        box_hull((0.20, 0.20, 0.10)),
        box_hull((0.45, 0.45, 0.03), center=(0.0, 0.0, 0.03)),
    )
    links = (
        box_hull((l1, 0.04, 0.04), center=(l1 / 2, 0.0, 0.0)),
        box_hull((l2, 0.03, 0.03), center=(l2 / 2, 0.0, 0.0)),
        box_hull((l3, 0.03, 0.03), center=(l3 / 2, 0.0, 0.0)),
        box_hull((l4, 0.10, 0.03), center=(l4 / 2, 0.0, 0.0)),  # gripper opening envelope
    )
    return RobotHullModel(body_hulls=body, link_hulls=links)


@dataclass(frozen=True)
class ScoredGrasp:
    """A candidate with its reachability solution, approach, and collision-discounted score."""

    candidate: GraspCandidate
    target_state: RobotState
    trajectory: Trajectory
    penalty: int  # penetrating point count accumulated over all waypoints
    visual_score: float
    execution_score: float


def wrap_angle(angle):
    return np.arctan2(np.sin(angle), np.cos(angle))


def interpolate_trajectory(start: RobotState, target: RobotState, count: int) -> Trajectory:
    """Linear base-translation and joint interpolation with shortest-arc yaw.

    Endpoints are the given states exactly; count must be >= 2.
    """
    if count < 2:
        raise ValueError("a trajectory needs at least 2 waypoints")
    fractions = np.linspace(0.0, 1.0, count)

    p0, p1 = start.base.translation, target.base.translation
    positions = p0 + fractions[:, None] * (p1 - p0)
    positions[0] = p0
    positions[-1] = p1

    yaw0, yaw1 = start.base.yaw, target.base.yaw
    delta = float(wrap_angle(yaw1 - yaw0))
    yaws = yaw0 + fractions * delta
    yaws[-1] = yaw0 + delta

    joints = start.q + fractions[:, None] * (target.q - start.q)
    joints[0] = start.q
    joints[-1] = target.q

    return Trajectory(positions=positions, yaws=yaws, joints=joints)


def hulls_at(state: RobotState, model: RobotHullModel, arm: ArmModel) -> list[ConvexHull]:
    """World-frame robot hulls at one state: body by the base pose, links by their frames."""
    origins, rotations = link_frames_batch(
        state.base.translation[None, :], np.array([state.base.yaw]), state.q[None, :], arm
    )
    world = [transform_hull(h, state.base) for h in model.body_hulls]
    for i, hull in enumerate(model.link_hulls):
        frame = Pose.from_matrix(rotations[0, i], origins[0, i])
        world.append(transform_hull(hull, frame))
    return world


@dataclass(frozen=True)
class TrajectoryGeometry:
    """Precomputed hull frames along a trajectory (body hulls first, then links).

    `origins[s, h]` / `rotations[s, h]` place hull h's local frame at waypoint
    s; `radii[s]` is the conservative bounding-sphere radius around the base.
    """

    hulls: tuple[ConvexHull, ...]
    origins: np.ndarray  # (S, H, 3)
    rotations: np.ndarray  # (S, H, 3, 3)
    centroids: np.ndarray  # (S, H, 3) world hull centroids
    radii: np.ndarray  # (S,)
    circumradii_sq: np.ndarray  # (H,) squared hull circumradii plus tolerance


def trajectory_geometry(traj: Trajectory, model: RobotHullModel, arm: ArmModel) -> TrajectoryGeometry:
    link_origins, link_rotations = link_frames_batch(traj.positions, traj.yaws, traj.joints, arm)
    s = len(traj)
    n_body = len(model.body_hulls)

    cos_yaw = np.cos(traj.yaws)
    sin_yaw = np.sin(traj.yaws)
    base_rot = np.zeros((s, 3, 3))
    base_rot[:, 0, 0] = cos_yaw
    base_rot[:, 0, 1] = -sin_yaw
    base_rot[:, 1, 0] = sin_yaw
    base_rot[:, 1, 1] = cos_yaw
    base_rot[:, 2, 2] = 1.0

    hulls = tuple(model.body_hulls) + tuple(model.link_hulls)
    origins = np.empty((s, len(hulls), 3))
    rotations = np.empty((s, len(hulls), 3, 3))
    origins[:, :n_body] = traj.positions[:, None, :]
    rotations[:, :n_body] = base_rot[:, None, :, :]
    origins[:, n_body:] = link_origins[:, :4]
    rotations[:, n_body:] = link_rotations[:, :4]

    local_centroids = np.stack([h.centroid for h in hulls])  # (H, 3)
    centroids = origins + np.einsum("shij,hj->shi", rotations, local_centroids)
    circumradii = np.array([h.circumradius for h in hulls])
    distances = np.linalg.norm(centroids - traj.positions[:, None, :], axis=2)
    radii = (distances + circumradii[None, :]).max(axis=1) + HULL_EPS + _RADIUS_MARGIN
    return TrajectoryGeometry(
        hulls, origins, rotations, centroids, radii, (circumradii + 1e-9) ** 2
    )


def conservative_radii(traj: Trajectory, model: RobotHullModel, arm: ArmModel) -> np.ndarray:
    """Bounding-sphere radius per waypoint: a point inside any robot hull at
    waypoint s is guaranteed to lie within radii[s] of the base position."""
    return trajectory_geometry(traj, model, arm).radii


def coarse_filter(traj: Trajectory, index: SpatialIndex, model: RobotHullModel,
                  arm: ArmModel, geometry: TrajectoryGeometry | None = None) -> list[np.ndarray]:
    """Per-waypoint scene-point candidates from the conservative bounding spheres.

    An empty set certifies that waypoint collision-free; returned index arrays
    are sorted ascending.
    """
    if geometry is None:
        geometry = trajectory_geometry(traj, model, arm)
    return index.radius_query_many(traj.positions, geometry.radii)


def _count_inside_union_at(points: np.ndarray, geometry: TrajectoryGeometry, s: int,
                           tol: float = HULL_EPS) -> int:
    """Points strictly inside the robot hull union at waypoint s (each counted once).

    A point inside a hull must lie within that hull's circumradius of its
    centroid, so one distance matrix prunes nearly all points before the
    half-space tests, which run in each hull's local frame.
    """
    diffs = points[:, None, :] - geometry.centroids[s][None, :, :]  # (K, H, 3)
    dist_sq = np.einsum("khi,khi->kh", diffs, diffs)
    near = dist_sq <= geometry.circumradii_sq[None, :]
    relevant = near.any(axis=1)
    if not relevant.any():
        return 0

    inside = np.zeros(len(points), dtype=bool)
    for h, hull in enumerate(geometry.hulls):
        candidate = near[:, h] & ~inside
        if not candidate.any():
            continue
        idx = np.nonzero(candidate)[0]
        local = (points[idx] - geometry.origins[s, h]) @ geometry.rotations[s, h]
        residual = local @ hull.normals.T - hull.offsets
        inside[idx[residual.max(axis=1) < -tol]] = True
    return int(inside.sum())


def collision_penalty(traj: Trajectory, local_sets, cloud_points, model: RobotHullModel,
                      arm: ArmModel, geometry: TrajectoryGeometry | None = None) -> int:
    """Total penetrating-point count over the trajectory.

    For each waypoint, every local scene point strictly inside the robot's
    hull union counts once; the same point recurs at every waypoint it
    penetrates, so dwelling inside an obstacle accumulates.
    """
    cloud_points = np.asarray(cloud_points, dtype=np.float64)
    if geometry is None:
        geometry = trajectory_geometry(traj, model, arm)
    total = 0
    for s, indices in enumerate(local_sets):
        if len(indices) == 0:
            continue
        total += _count_inside_union_at(cloud_points[indices], geometry, s)
    return total


def execution_score(visual_score: float, penalty: int, penalty_scale: float) -> float:
    """Collision-discounted score: v * max(0, 1 - lambda * n)."""
    if penalty_scale < 0:
        raise ValueError("penalty scale must be >= 0")
    return float(visual_score * max(0.0, 1.0 - penalty_scale * penalty))


def build_penalty_cloud(cloud: PointCloud, object_centroid, target_id: int | None,
                        exclusion_radius: float) -> np.ndarray:
    """Scene points used for collision scoring, with the grasp target removed.

    The gripper must close around its own target without being charged for it,
    so target-labeled points are dropped. For clouds without labels the
    exclusion falls back to a ball of `exclusion_radius` around the object
    centroid.
    """
    points = cloud.points
    keep = np.ones(len(points), dtype=bool)
    if target_id is not None and cloud.labels is not None:
        keep &= cloud.labels != target_id
    elif exclusion_radius > 0:
        centroid = np.asarray(object_centroid, dtype=np.float64)
        keep &= np.linalg.norm(points - centroid, axis=1) > exclusion_radius
    return points[keep]


def evaluate_batch(candidates: FeasibleGraspSet, current: RobotState, cloud: PointCloud,
                   config: CollisionConfig, arm: ArmModel, model: RobotHullModel,
                   target_id: int | None = None, min_base_z: float = 0.0,
                   skip_collisions: bool = False, use_coarse: bool = True) -> list[ScoredGrasp]:
    """Score every reachable candidate's approach trajectory against the scene cloud.

    Results keep the candidate order; kinematically unreachable candidates are
    omitted. `skip_collisions` zeroes all penalties (obstacle-blind ablation)
    and `use_coarse=False` runs the exact stage on the full cloud at every
    waypoint (slow-backend ablation). Output is independent of evaluation
    order.
    """
    penalty_points = build_penalty_cloud(
        cloud, candidates.object_centroid, target_id, config.target_exclusion_m
    )
    index = SpatialIndex(penalty_points) if (not skip_collisions and use_coarse) else None

    results: list[ScoredGrasp] = []
    for cand in candidates.candidates:
        target = base_pose_for_grasp(
            cand.translation, cand.rotation_matrix, arm, min_base_z=min_base_z
        )
        if target is None:
            continue
        traj = interpolate_trajectory(current, target, config.waypoints)
        if skip_collisions:
            penalty = 0
        else:
            geometry = trajectory_geometry(traj, model, arm)
            if use_coarse:
                local_sets = coarse_filter(traj, index, model, arm, geometry)
            else:
                everything = np.arange(len(penalty_points), dtype=np.int64)
                local_sets = [everything] * len(traj)
            penalty = collision_penalty(traj, local_sets, penalty_points, model, arm, geometry)
        visual = cand.stability_score
        results.append(
            ScoredGrasp(
                candidate=cand,
                target_state=target,
                trajectory=traj,
                penalty=penalty,
                visual_score=visual,
                execution_score=execution_score(visual, penalty, config.penalty_scale),
            )
        )
    return results
