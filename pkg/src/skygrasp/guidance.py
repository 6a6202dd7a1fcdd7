"""Active-perception guidance: stationary yaw scan and adaptive orbital exploration.

The orbit keeps the sensed region inside the camera's field of view by adapting
the goal radius to the measured extent of the region, and regulates the radial
distance with a proportional term while circulating tangentially.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import DegenerateGeometryError

TWO_PI = 2.0 * np.pi


class GuidanceMode(Enum):
    YAW_SEARCH = "yaw_search"
    ORBIT_CONTEXT = "orbit_context"
    ORBIT_TARGET = "orbit_target"


@dataclass(frozen=True)
class GuidanceConfig:
    v_orb: float = 0.3  # tangential orbit speed, m/s
    k_p: float = 0.8  # radial proportional gain, 1/s
    yaw_step: float = 0.1  # yaw-scan increment per tick, rad
    min_radius: float = 0.5  # orbit radius floor (vehicle safety envelope), m
    altitude_offset: float = 0.35  # orbit center raise above the tracked centroid, m
    max_speed: float = 1.5  # command magnitude ceiling, m/s

    def to_dict(self) -> dict:
        return {
            "v_orb": self.v_orb,
            "k_p": self.k_p,
            "yaw_step": self.yaw_step,
            "min_radius": self.min_radius,
            "altitude_offset": self.altitude_offset,
            "max_speed": self.max_speed,
        }


@dataclass(frozen=True)
class VelocityCommand:
    linear: np.ndarray  # (3,) m/s
    yaw: float  # rad, absolute setpoint

    def __post_init__(self):
        linear = np.asarray(self.linear, dtype=np.float64).reshape(3)
        linear.setflags(write=False)
        object.__setattr__(self, "linear", linear)

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.linear))


@dataclass(frozen=True)
class GuidanceObservation:
    """Per-tick perception summary consumed by the guidance state machine."""

    context_visible: bool = False
    object_visible: bool = False
    context_points: np.ndarray | None = None  # world points under the context mask
    context_centroid: np.ndarray | None = None
    object_points: np.ndarray | None = None
    object_centroid: np.ndarray | None = None


@dataclass(frozen=True)
class GuidanceState:
    mode: GuidanceMode = GuidanceMode.YAW_SEARCH
    context_center: np.ndarray | None = None
    target_center: np.ndarray | None = None
    goal_radius: float = 0.0
    scanned_yaw: float = 0.0
    search_exhausted: bool = False
    target_locked: bool = False

    @property
    def orbit_center(self) -> np.ndarray | None:
        if self.mode is GuidanceMode.ORBIT_TARGET:
            return self.target_center
        return self.context_center


def orbit_radius(points, center, fov: float, min_radius: float = 0.5) -> float:
    """Goal orbit radius keeping the measured point set inside the field of view.

    Computed as max ||p - center|| / tan(fov / 2); degenerate (zero-extent)
    inputs clamp to `min_radius`.
    """
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(points) == 0:
        raise ValueError("orbit radius needs a non-empty point set")
    if not 0.0 < fov < np.pi:
        raise ValueError("fov must be in (0, pi)")
    extent = float(np.linalg.norm(points - np.asarray(center, dtype=np.float64), axis=1).max())
    return max(extent / np.tan(fov / 2.0), min_radius)


def orbit_velocity(position, center, goal_radius: float, v_orb: float, k_p: float,
                   max_speed: float | None = None) -> VelocityCommand:
    """Orbit command: tangential circulation plus proportional radial correction.

    The radial direction points from the center toward the vehicle and the
    tangent is horizontal (counterclockwise seen from above); the yaw setpoint
    faces the center.
    """
    position = np.asarray(position, dtype=np.float64)
    center = np.asarray(center, dtype=np.float64)
    radial = position - center
    distance = float(np.linalg.norm(radial))
    if distance < 1e-6:
        raise DegenerateGeometryError("vehicle coincides with the orbit center")
    n_rad = radial / distance
    horizontal = np.array([-n_rad[1], n_rad[0], 0.0])  # z x n_rad
    tangent_norm = float(np.linalg.norm(horizontal))
    if tangent_norm < 1e-6:
        raise DegenerateGeometryError("vehicle directly above the orbit center")
    t_tan = horizontal / tangent_norm

    linear = v_orb * t_tan + k_p * (goal_radius - distance) * n_rad
    if max_speed is not None:
        speed = float(np.linalg.norm(linear))
        if speed > max_speed:
            linear = linear * (max_speed / speed)
    yaw = float(np.arctan2(center[1] - position[1], center[0] - position[0]))
    return VelocityCommand(linear, yaw)


def lock_onto_target(state: GuidanceState) -> GuidanceState:
    """Switch the orbit to the target centroid after an unsafe-grasp decision."""
    return replace(state, target_locked=True)


def guidance_step(state: GuidanceState, position, current_yaw: float,
                  obs: GuidanceObservation, cfg: GuidanceConfig,
                  fov: float) -> tuple[GuidanceState, VelocityCommand]:
    """Advance the exploration state machine by one tick.

    Yaw-scans while the context has never been seen, orbits the context
    centroid once it is, and orbits the target centroid once the mission has
    locked on after declining a grasp. A full scanned revolution with no
    detection raises the search-exhausted flag.
    """
    position = np.asarray(position, dtype=np.float64)

    context_center = state.context_center
    goal_radius = state.goal_radius
    if obs.context_visible and obs.context_centroid is not None:
        context_center = np.asarray(obs.context_centroid, dtype=np.float64)
    target_center = state.target_center
    if obs.object_visible and obs.object_centroid is not None:
        target_center = np.asarray(obs.object_centroid, dtype=np.float64)

    # Empty context mask: stationary yaw scan until it reappears.
    if not obs.context_visible:
        scanned = state.scanned_yaw + cfg.yaw_step
        new_state = replace(
            state,
            mode=GuidanceMode.YAW_SEARCH,
            context_center=context_center,
            target_center=target_center,
            scanned_yaw=scanned,
            search_exhausted=state.search_exhausted or scanned >= TWO_PI,
        )
        command = VelocityCommand(np.zeros(3), current_yaw + cfg.yaw_step)
        return new_state, command

    # Pick the orbit focus: the target once locked and seen, else the context.
    if state.target_locked and target_center is not None and obs.object_visible:
        mode = GuidanceMode.ORBIT_TARGET
        focus = target_center
        radius_points = obs.object_points
    else:
        mode = GuidanceMode.ORBIT_CONTEXT
        focus = context_center
        radius_points = obs.context_points

    if radius_points is not None and len(radius_points) > 0:
        goal_radius = orbit_radius(radius_points, focus, fov, cfg.min_radius)
    elif goal_radius <= 0.0:
        goal_radius = cfg.min_radius

    raised_center = np.asarray(focus, dtype=np.float64) + np.array([0.0, 0.0, cfg.altitude_offset])
    command = orbit_velocity(
        position, raised_center, goal_radius, cfg.v_orb, cfg.k_p, cfg.max_speed
    )

    new_state = replace(
        state,
        mode=mode,
        context_center=context_center,
        target_center=target_center,
        goal_radius=goal_radius,
        scanned_yaw=0.0,
    )
    return new_state, command
