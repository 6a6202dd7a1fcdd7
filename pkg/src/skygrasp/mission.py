"""End-to-end mission loop: perceive, explore, evaluate grasps, decide, and execute.

Each tick renders the depth sensor, segments the context and target prompts,
and either continues the exploration behaviors or runs a grasp-evaluation
cycle. A grasp executes only when its collision-discounted score clears the
feasibility threshold; otherwise the vehicle repositions around the target
centroid and tries again. Execution is replayed kinematically against
ground-truth geometry to judge the episode outcome.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .collision import (
    CollisionConfig,
    RobotHullModel,
    ScoredGrasp,
    coarse_filter,
    collision_penalty,
    default_robot_hulls,
    evaluate_batch,
    interpolate_trajectory,
    wrap_angle,
)
from .config import PipelineConfig
from .geometry import Pose, SpatialIndex, point_in_hull
from .grasping import FeasibleGraspSet, GraspConfig, best_antipodal_pair, build_feasible_set
from .guidance import GuidanceObservation, GuidanceState, guidance_step, lock_onto_target
from .kinematics import ArmModel, RobotState, forward_kinematics
from .perception import camera_pose, mask_centroid, parse_instruction, render_depth, segment
from .scene import Scene
from .seeding import derive_seed

EXECUTION_LIFT_HEIGHT = 0.3  # post-grasp vertical clearance translation, meters
EXECUTION_FINE_FACTOR = 4  # execution replay waypoint refinement over the planned S
_CLOSURE_SEGMENT_SAMPLES = 41


class Outcome(str, Enum):
    SUCCESS = "success"
    COLLISION_FAILURE = "collision_failure"
    GRASP_MISS = "grasp_miss"
    SEARCH_FAILURE = "search_failure"
    TIMEOUT = "timeout"


class ExecutionOutcome(str, Enum):
    LIFTED = "lifted"
    COLLIDED = "collided"
    MISSED = "missed"


@dataclass(frozen=True)
class Decision:
    action: str  # "execute" | "reposition"
    best: ScoredGrasp | None = None
    best_score: float | None = None


def decide(scored: list[ScoredGrasp], delta: float) -> Decision:
    """Execute the argmax-score grasp when it clears delta, else reposition.

    Ties keep the earliest candidate; an empty list is treated as unsafe.
    """
    if not scored:
        return Decision("reposition")
    scores = np.array([s.execution_score for s in scored])
    best_idx = int(np.argmax(scores))
    best_score = float(scores[best_idx])
    if best_score > delta:
        return Decision("execute", scored[best_idx], best_score)
    return Decision("reposition", None, best_score)


def ground_truth_grasp_center(scene: Scene, config: GraspConfig) -> np.ndarray:
    """Best antipodal grasp center on the noiseless target surface, by exhaustive search."""
    gt = scene.ground_truth_cloud()
    target_id = scene.target.object_id
    points = gt.points[gt.labels == target_id]
    pair = best_antipodal_pair(points, config.w_max)
    if pair is None:
        return points.mean(axis=0)
    anchor, partner, _ = pair
    return 0.5 * (points[anchor] + points[partner])


def _surface_distance(point: np.ndarray, target, gt_points: np.ndarray) -> float:
    """Distance from a point to the target surface; exact inside a hull, sampled outside."""
    for hull in target.hulls:
        residual = hull.normals @ point - hull.offsets
        if residual.max() <= 0.0:
            return float(-residual.max())
    return float(np.linalg.norm(gt_points - point, axis=1).min())


def simulate_execution(grasp: ScoredGrasp, scene: Scene, arm: ArmModel,
                       model: RobotHullModel, config: CollisionConfig) -> ExecutionOutcome:
    """Replay the approach against ground truth and test gripper closure.

    The planned trajectory is refined 4x and checked against the noiseless
    scene cloud with the target removed; any penetration along the approach or
    the vertical lift is a collision. At the final pose the grasp succeeds
    when the closing segment crosses the target and the grasp center sits
    within half the object's smallest extent of its surface.
    """
    target = scene.target
    gt = scene.ground_truth_cloud()
    obstacle_mask = gt.labels != target.object_id
    obstacle_points = gt.points[obstacle_mask]
    index = SpatialIndex(obstacle_points)

    fine_count = EXECUTION_FINE_FACTOR * config.waypoints
    start = grasp.trajectory.state(0)
    fine = interpolate_trajectory(start, grasp.target_state, fine_count)
    local = coarse_filter(fine, index, model, arm)
    if collision_penalty(fine, local, obstacle_points, model, arm) > 0:
        return ExecutionOutcome.COLLIDED

    # Vertical lift to clear the clutter, collision-checked the same way.
    final = grasp.target_state
    lifted_state = RobotState(
        Pose(final.base.translation + np.array([0.0, 0.0, EXECUTION_LIFT_HEIGHT]), final.base.rotation),
        final.q,
    )
    lift = interpolate_trajectory(final, lifted_state, 9)
    lift_local = coarse_filter(lift, index, model, arm)
    if collision_penalty(lift, lift_local, obstacle_points, model, arm) > 0:
        return ExecutionOutcome.COLLIDED

    # Closure test at the realized gripper pose.
    ee = forward_kinematics(final.q, final.base, arm)
    center = ee.translation
    closing = ee.matrix[:, 1]
    half_width = 0.5 * grasp.candidate.width
    offsets = np.linspace(-half_width, half_width, _CLOSURE_SEGMENT_SAMPLES)
    samples = center + offsets[:, None] * closing
    crosses = any(
        point_in_hull(p, hull) for hull in target.hulls for p in samples
    )
    target_points = gt.points[~obstacle_mask]
    proximity = _surface_distance(center, target, target_points)
    sample_pitch = 0.01  # ground-truth surface sampling spacing
    if crosses and proximity <= 0.5 * target.smallest_extent() + 0.5 * sample_pitch:
        return ExecutionOutcome.LIFTED
    return ExecutionOutcome.MISSED


_EXECUTION_TO_OUTCOME = {
    ExecutionOutcome.LIFTED: Outcome.SUCCESS,
    ExecutionOutcome.COLLIDED: Outcome.COLLISION_FAILURE,
    ExecutionOutcome.MISSED: Outcome.GRASP_MISS,
}


@dataclass(frozen=True)
class ExecutedGrasp:
    center: np.ndarray
    width: float
    visual_score: float
    execution_score: float
    penalty: int


@dataclass(frozen=True)
class EpisodeResult:
    outcome: Outcome
    p_gt: np.ndarray
    p_pred: np.ndarray | None
    ticks_to_decision: int | None
    total_ticks: int
    decision_time_s: float | None
    executed: ExecutedGrasp | None
    cycle_times_ms: tuple[float, ...]
    n_cycles: int

    @property
    def decided(self) -> bool:
        return self.p_pred is not None

    @property
    def grasp_error(self) -> float | None:
        if self.p_pred is None:
            return None
        return float(np.linalg.norm(self.p_pred - self.p_gt))


def run_episode(scene: Scene, instruction: str, config: PipelineConfig,
                arm: ArmModel | None = None, hull_model: RobotHullModel | None = None,
                trace_sink=None) -> EpisodeResult:
    """Run the full language-to-grasp loop on one scene; deterministic per seed.

    `trace_sink`, when given, receives one dict per tick plus a final result
    record. Wall-clock compute timings appear only in the trace and the
    returned cycle times; every other field is reproducible.
    """
    scene.validate()
    if arm is None:
        arm = config.arm
    if hull_model is None:
        hull_model = default_robot_hulls(arm)
    mission = config.mission
    context_prompt, object_prompt = parse_instruction(instruction)

    dt = 1.0 / mission.tick_rate
    position = np.array(scene.spawn.translation)
    yaw = scene.spawn.yaw
    rest_q = np.asarray(arm.rest_config, dtype=np.float64)
    gstate = GuidanceState()

    p_gt = ground_truth_grasp_center(scene, config.grasp)
    target_obj = scene.target

    frozen_perception = None
    evaluated_once = False
    last_eval_tick: int | None = None
    object_ever_seen = False
    cycle_times: list[float] = []
    outcome: Outcome | None = None
    executed: ExecutedGrasp | None = None
    p_pred = None
    decision_tick: int | None = None
    ticks_used = 0

    for tick in range(mission.max_ticks):
        ticks_used = tick + 1
        base = Pose.from_yaw(yaw, position)

        if frozen_perception is None:
            cam = camera_pose(base, scene.camera)
            frame = render_depth(scene, cam, scene.camera, derive_seed(mission.seed, "render", tick))
            cloud = frame.cloud()
            context_mask = segment(cloud, context_prompt, scene, mission.min_mask_pixels)
            object_mask = segment(cloud, object_prompt, scene, mission.min_mask_pixels)
        else:
            cloud, context_mask, object_mask = frozen_perception

        context_visible = not context_mask.empty
        object_visible = not object_mask.empty
        object_ever_seen = object_ever_seen or object_visible

        obs = GuidanceObservation(
            context_visible=context_visible,
            object_visible=object_visible,
            context_points=cloud.points[context_mask.cloud_indices] if context_visible else None,
            context_centroid=mask_centroid(context_mask, cloud) if context_visible else None,
            object_points=cloud.points[object_mask.cloud_indices] if object_visible else None,
            object_centroid=mask_centroid(object_mask, cloud) if object_visible else None,
        )

        n_candidates = None
        s_best = None
        decision_label = None
        compute_ms = None

        due = last_eval_tick is None or (tick - last_eval_tick) >= mission.reeval_period
        if context_visible and object_visible and due:
            started = time.perf_counter()
            current = RobotState.hover(position, yaw, rest_q)
            object_points = cloud.select(object_mask.cloud_indices)
            # A mask below the crop threshold cannot support grasp synthesis:
            # the cycle yields an empty candidate set and repositions closer.
            crop_usable = len(object_mask) >= mission.eval_min_pixels
            if crop_usable:
                try:
                    feasible = build_feasible_set(
                        object_points, scene.gravity, config.grasp,
                        derive_seed(mission.seed, "sample", tick),
                    )
                except ValueError:
                    feasible = FeasibleGraspSet((), object_points.points.mean(axis=0))
                scored = evaluate_batch(
                    feasible, current, cloud, config.collision, arm, hull_model,
                    target_id=target_obj.object_id,
                    skip_collisions=mission.no_obstacle_awareness,
                    use_coarse=not mission.brute_force_collision,
                )
            else:
                scored = []
            compute_ms = (time.perf_counter() - started) * 1e3
            cycle_times.append(compute_ms)
            last_eval_tick = tick

            decision = decide(scored, mission.delta)
            n_candidates = len(scored)
            s_best = decision.best_score
            decision_label = decision.action
            if crop_usable and not evaluated_once and mission.open_loop:
                frozen_perception = (cloud, context_mask, object_mask)
            if crop_usable:
                evaluated_once = True

            if decision.action == "execute":
                best = decision.best
                p_pred = np.array(best.candidate.translation)
                decision_tick = tick
                execution = simulate_execution(best, scene, arm, hull_model, config.collision)
                outcome = _EXECUTION_TO_OUTCOME[execution]
                executed = ExecutedGrasp(
                    center=p_pred,
                    width=best.candidate.width,
                    visual_score=best.visual_score,
                    execution_score=best.execution_score,
                    penalty=best.penalty,
                )
                _emit_tick(trace_sink, tick, gstate, obs, n_candidates, s_best,
                           decision_label, compute_ms, position, yaw)
                break
            gstate = lock_onto_target(gstate)

        gstate, command = guidance_step(gstate, position, yaw, obs, config.guidance, scene.camera.fov)
        position = position + command.linear * dt
        yaw = float(wrap_angle(command.yaw))

        _emit_tick(trace_sink, tick, gstate, obs, n_candidates, s_best,
                   decision_label, compute_ms, position, yaw)

        if gstate.search_exhausted:
            outcome = Outcome.SEARCH_FAILURE
            break

    if outcome is None:
        outcome = Outcome.TIMEOUT if object_ever_seen else Outcome.SEARCH_FAILURE

    result = EpisodeResult(
        outcome=outcome,
        p_gt=p_gt,
        p_pred=p_pred,
        ticks_to_decision=decision_tick,
        total_ticks=ticks_used,
        decision_time_s=None if decision_tick is None else decision_tick / mission.tick_rate,
        executed=executed,
        cycle_times_ms=tuple(cycle_times),
        n_cycles=len(cycle_times),
    )
    if trace_sink is not None:
        trace_sink(
            {
                "type": "result",
                "outcome": result.outcome.value,
                "p_gt": [float(x) for x in result.p_gt],
                "p_pred": None if p_pred is None else [float(x) for x in p_pred],
                "ticks_to_decision": decision_tick,
                "total_ticks": ticks_used,
                "n_cycles": result.n_cycles,
                "grasp_error": result.grasp_error,
            }
        )
    return result


def _emit_tick(trace_sink, tick, gstate, obs, n_candidates, s_best, decision_label,
               compute_ms, position, yaw):
    if trace_sink is None:
        return
    trace_sink(
        {
            "type": "tick",
            "tick": tick,
            "mode": gstate.mode.value,
            "context_visible": obs.context_visible,
            "object_visible": obs.object_visible,
            "n_candidates": n_candidates,
            "s_best": s_best,
            "decision": decision_label,
            "compute_ms": compute_ms,
            "position": [float(x) for x in position],
            "yaw": float(yaw),
        }
    )
