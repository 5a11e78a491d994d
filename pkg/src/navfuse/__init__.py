"""navfuse: a 2-D navigation stack.

Informed sampling-based global planning feeding two local controllers
(grid-search MPC and obstacle-avoiding pure pursuit) whose predicted state
sequences are fused per dimension by normalized mutual information, all
driven by a deterministic scenario simulator.
"""

from .core import (
    ControlInput,
    Trajectory,
    VehicleParams,
    VehicleState,
    normalize_angle,
    predict_trajectory,
    propagate,
)
from .fusion import (
    DimMi,
    FusionConfig,
    MiReport,
    entropy,
    fuse_states,
    mutual_information,
    normalized_mi,
)
from .gridmap import (
    GridDimensionError,
    MapFormatError,
    Observation,
    Obstacle,
    OccupancyGrid,
    is_free_point,
    is_free_segment,
    is_free_trajectory,
    load_grid,
    parse_grid,
)
from .mpc import (
    ArcPath,
    MpcConfig,
    MpcDecision,
    ReferenceExhaustedError,
    build_reference,
    deviation_cost,
    obstacle_cost,
    select_best_control,
    trajectory_cost,
)
from .planner import (
    InvalidEndpointError,
    PlannerConfig,
    PlanningFailedError,
    PlanResult,
    format_plan_result,
    informed_sample,
    plan,
    shortcut_path,
)
from .pursuit import (
    DegenerateTargetError,
    PursuitConfig,
    PursuitDecision,
    candidate_state,
    candidate_targets,
    perpendicular_offsets,
    pursuit_step,
    select_target,
)
from .simulator import (
    CONTROLLERS,
    MetricSummary,
    RunResult,
    Scenario,
    SimConfig,
    WorldState,
    compute_metrics,
    run_scenario,
    step_world,
)

__version__ = "0.1.0"
