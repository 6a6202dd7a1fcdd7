"""skygrasp: a deterministic planning-and-simulation engine for language-guided aerial grasping.

The pipeline turns a pick-up instruction into an executed grasp: exploration
by yaw scan and adaptive orbit, antipodal 6-DoF grasp candidates over the
segmented target, an aerial feasibility filter, batched two-stage trajectory
collision scoring, and a threshold decision that either executes or
repositions. A scenario harness benchmarks the whole loop with seeded scenes
and the standard metric suite (GA, SGL, CFGR, OSF, CIF).
"""

from .collision import (
    CollisionConfig,
    RobotHullModel,
    ScoredGrasp,
    Trajectory,
    coarse_filter,
    collision_penalty,
    default_robot_hulls,
    evaluate_batch,
    execution_score,
    hulls_at,
    interpolate_trajectory,
)
from .config import (
    CellSpec,
    MissionConfig,
    PipelineConfig,
    SuiteConfig,
    apply_ablation,
    config_hash,
    load_config,
)
from .errors import (
    ConfigError,
    DegenerateGeometryError,
    GenerationError,
    InstructionParseError,
    SceneError,
    SkygraspError,
)
from .geometry import (
    ConvexHull,
    PointCloud,
    Pose,
    SpatialIndex,
    box_hull,
    build_hull,
    point_in_hull,
    points_in_hull,
    transform_hull,
)
from .grasping import (
    FeasibleGraspSet,
    GraspCandidate,
    GraspConfig,
    build_feasible_set,
    gravity_filter,
    sample_candidates,
    stability_score,
)
from .guidance import (
    GuidanceConfig,
    GuidanceMode,
    GuidanceObservation,
    GuidanceState,
    VelocityCommand,
    guidance_step,
    orbit_radius,
    orbit_velocity,
)
from .harness import replay_trace, run_suite
from .kinematics import ArmModel, RobotState, base_pose_for_grasp, forward_kinematics, inverse_kinematics
from .metrics import MetricsReport, compute_metrics
from .mission import (
    Decision,
    EpisodeResult,
    ExecutionOutcome,
    Outcome,
    decide,
    run_episode,
    simulate_execution,
)
from .perception import (
    DepthFrame,
    SegmentationMask,
    camera_pose,
    mask_centroid,
    parse_instruction,
    render_depth,
    segment,
)
from .scene import CameraModel, Scene, SceneObject, load_scene, scene_from_dict
from .scenarios import ScenarioSpec, build_scenario, instruction_for, scenario_dict

__version__ = "0.1.0"
