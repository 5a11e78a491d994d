"""Deterministic closed-loop scenario engine.

Per run: plan the global path once, then tick the selected local controller,
propagate the vehicle, advance dynamic obstacles (constant velocity with
elastic reflection at the map boundary), and record traces. Everything is a
pure function of the scenario and its seed.

For the fused controller both local controllers run each tick; their
predicted trajectories are fused dimension-wise, and the actuated control is
recovered from the fused next state by one-step inverse kinematics
(a from dv/dt, steer from dtheta through the bicycle relation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import (
    ControlInput,
    Trajectory,
    VehicleParams,
    VehicleState,
    normalize_angle,
    propagate,
)
from .fusion import FusionConfig, MiReport, fuse_states
from .gridmap import Obstacle, Observation, OccupancyGrid, is_free_point
from .mpc import ArcPath, MpcConfig, build_reference, select_best_control
from .planner import PlannerConfig, PlanningFailedError, PlanResult, plan
from .pursuit import PursuitConfig, pursuit_step

OUTCOME_GOAL = "goal-reached"
OUTCOME_COLLISION = "collision"
OUTCOME_TIMEOUT = "timeout"
OUTCOME_PLANNING_FAILED = "planning-failed"

CONTROLLERS = ("mpc-basic", "pursuit", "info-fusion")

_CONTROLLER_ALIASES = {
    "mpc-basic": "mpc-basic",
    "mpc_basic": "mpc-basic",
    "pursuit": "pursuit",
    "pure-pursuit": "pursuit",
    "pure_pursuit": "pursuit",
    "info-fusion": "info-fusion",
    "info_fusion": "info-fusion",
}


def canonical_controller(name: str) -> str:
    key = name.strip().lower()
    if key not in _CONTROLLER_ALIASES:
        raise ValueError(f"unknown controller {name!r}; expected one of {CONTROLLERS}")
    return _CONTROLLER_ALIASES[key]


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.1
    max_steps: int = 600
    cruise_speed: float = 5.0
    plan_margin: float = 0.5  # extra footprint inflation for global planning only
    rng_seed: int = 0

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("sim dt must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.cruise_speed <= 0:
            raise ValueError("cruise_speed must be positive")
        if self.plan_margin < 0:
            raise ValueError("plan_margin must be non-negative")


@dataclass
class Scenario:
    """One reproducible experiment: map, endpoints, obstacles, and configs."""

    grid: OccupancyGrid
    start: VehicleState
    goal: tuple[float, float]
    goal_tolerance: float = 2.0
    obstacles: tuple[Obstacle, ...] = ()
    controller: str = "info-fusion"
    vehicle: VehicleParams = field(default_factory=VehicleParams)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    mpc: MpcConfig = field(default_factory=MpcConfig)
    pursuit: PursuitConfig = field(default_factory=PursuitConfig)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    seeds: int = 1
    map_path: str | None = None

    def __post_init__(self):
        self.obstacles = tuple(self.obstacles)
        self.goal = (float(self.goal[0]), float(self.goal[1]))
        self.controller = canonical_controller(self.controller)
        if self.goal_tolerance <= 0:
            raise ValueError("goal_tolerance must be positive")
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")
        if self.controller == "info-fusion":
            if self.mpc.horizon != self.pursuit.horizon or self.mpc.dt != self.pursuit.dt:
                raise ValueError(
                    "info-fusion needs matching mpc/pursuit horizons and dt "
                    f"(got {self.mpc.horizon}@{self.mpc.dt} vs {self.pursuit.horizon}@{self.pursuit.dt})"
                )

    @property
    def static_obstacles(self) -> tuple[Obstacle, ...]:
        return tuple(ob for ob in self.obstacles if ob.is_static)

    @property
    def dynamic_obstacles(self) -> tuple[Obstacle, ...]:
        return tuple(ob for ob in self.obstacles if not ob.is_static)


@dataclass(frozen=True)
class FusionStep:
    """Per-tick record of the three next-state predictions (for trace checks)."""

    pursuit_next: VehicleState
    mpc_next: VehicleState
    fused_next: VehicleState


@dataclass
class WorldState:
    """Mutable loop state for one run."""

    scenario: Scenario
    path: list[tuple[float, float]]
    arc: ArcPath
    vehicle: VehicleState
    obstacles: list[Obstacle]
    step: int = 0
    trajectory: list[VehicleState] = field(default_factory=list)
    controls: list[tuple[float, float, float]] = field(default_factory=list)
    mi_trace: list[MiReport] = field(default_factory=list)
    fusion_trace: list[FusionStep] = field(default_factory=list)
    clearances: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class RunResult:
    outcome: str
    steps_used: int
    elapsed_sim_time: float
    trajectory: Trajectory
    controls: tuple[tuple[float, float, float], ...]
    mi_trace: tuple[MiReport, ...]
    min_clearance: float
    path_length: float
    plan: PlanResult | None = None
    clearances: tuple[float, ...] = ()
    fusion_trace: tuple[FusionStep, ...] = ()


@dataclass(frozen=True)
class MetricSummary:
    outcome: str
    steps: int
    completion_time_s: float
    path_length_m: float
    min_clearance_m: float
    mean_clearance_m: float
    accel_variance: float
    steer_variance: float
    accel_sign_flips: int

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "steps": self.steps,
            "completion_time_s": self.completion_time_s,
            "path_length_m": self.path_length_m,
            "min_clearance_m": self.min_clearance_m,
            "mean_clearance_m": self.mean_clearance_m,
            "accel_variance": self.accel_variance,
            "steer_variance": self.steer_variance,
            "accel_sign_flips": self.accel_sign_flips,
        }


def densify_path(points, spacing: float) -> list[tuple[float, float]]:
    """Resample each polyline segment at <= spacing while keeping every vertex."""
    pts = [(float(p[0]), float(p[1])) for p in points]
    if len(pts) < 2:
        return pts
    out = [pts[0]]
    for (x1, y1), (x2, y2) in zip(pts, pts[1:]):
        seg = math.hypot(x2 - x1, y2 - y1)
        n = max(1, int(math.ceil(seg / spacing)))
        for k in range(1, n + 1):
            t = k / n
            out.append((x1 + t * (x2 - x1), y1 + t * (y2 - y1)))
    return out


def _advance_obstacle(ob: Obstacle, dt: float, extent) -> Obstacle:
    if ob.is_static:
        return ob
    xmin, ymin, xmax, ymax = extent
    x = ob.center[0] + ob.velocity[0] * dt
    y = ob.center[1] + ob.velocity[1] * dt
    vx, vy = ob.velocity
    if x > xmax:
        x = 2.0 * xmax - x
        vx = -vx
    elif x < xmin:
        x = 2.0 * xmin - x
        vx = -vx
    if y > ymax:
        y = 2.0 * ymax - y
        vy = -vy
    elif y < ymin:
        y = 2.0 * ymin - y
        vy = -vy
    return Obstacle((x, y), ob.radius, (vx, vy))


def _clearance(state: VehicleState, obstacles, footprint_radius: float) -> float:
    best = math.inf
    for ob in obstacles:
        d = (
            math.hypot(ob.center[0] - state.x, ob.center[1] - state.y)
            - ob.radius
            - footprint_radius
        )
        if d < best:
            best = d
    return best


def _control_toward(state: VehicleState, target: VehicleState, dt: float,
                    params: VehicleParams) -> ControlInput:
    """One-step inverse kinematics from the current state to a desired next state."""
    accel = (target.v - state.v) / dt
    dtheta = normalize_angle(target.theta - state.theta)
    if state.v <= 1e-9:
        delta = 0.0
    else:
        delta = math.atan(dtheta * params.wheelbase / (state.v * dt))
    return ControlInput(accel, delta)


def step_world(world: WorldState) -> WorldState:
    """Advance the loop by one tick: observe, control, propagate, move obstacles."""
    sc = world.scenario
    dt = sc.sim.dt
    observation = Observation(obstacles=tuple(world.obstacles), grid=sc.grid)

    if sc.controller == "mpc-basic":
        ref = build_reference(world.arc, world.vehicle, sc.mpc.horizon, sc.mpc.dt, sc.sim.cruise_speed)
        decision = select_best_control(
            world.vehicle, ref, sc.grid, observation.obstacles, sc.mpc, sc.vehicle
        )
        control = decision.control
    elif sc.controller == "pursuit":
        decision = pursuit_step(
            world.vehicle, world.path, observation.obstacles, sc.grid, sc.pursuit, sc.vehicle
        )
        control = decision.control
    else:  # info-fusion
        ref = build_reference(world.arc, world.vehicle, sc.mpc.horizon, sc.mpc.dt, sc.sim.cruise_speed)
        mpc_dec = select_best_control(
            world.vehicle, ref, sc.grid, observation.obstacles, sc.mpc, sc.vehicle
        )
        pur_dec = pursuit_step(
            world.vehicle, world.path, observation.obstacles, sc.grid, sc.pursuit, sc.vehicle
        )
        combined, report = fuse_states(pur_dec.predicted, mpc_dec.predicted, sc.fusion)
        control = _control_toward(world.vehicle, combined.states[1], dt, sc.vehicle)
        world.mi_trace.append(report)
        world.fusion_trace.append(
            FusionStep(
                pursuit_next=pur_dec.predicted.states[1],
                mpc_next=mpc_dec.predicted.states[1],
                fused_next=combined.states[1],
            )
        )

    t_now = world.step * dt
    world.controls.append((t_now, control.a, control.delta))
    world.vehicle = propagate(world.vehicle, control, dt, sc.vehicle)
    world.obstacles = [_advance_obstacle(ob, dt, sc.grid.extent) for ob in world.obstacles]
    world.step += 1
    world.trajectory.append(world.vehicle)
    world.clearances.append(_clearance(world.vehicle, world.obstacles, sc.vehicle.footprint_radius))
    return world


def run_scenario(sc: Scenario) -> RunResult:
    """Plan once, then loop step_world until goal / collision / timeout.

    Planner failure becomes outcome "planning-failed"; occupied endpoints
    raise InvalidEndpointError (broken input rather than a run outcome).
    """
    dt = sc.sim.dt
    planner_cfg = replace(sc.planner, rng_seed=sc.sim.rng_seed)
    try:
        plan_result = plan(
            sc.grid,
            sc.start.position,
            sc.goal,
            planner_cfg,
            sc.obstacles,
            sc.vehicle.footprint_radius + sc.sim.plan_margin,
        )
    except PlanningFailedError:
        traj = Trajectory((sc.start,), dt)
        return RunResult(
            outcome=OUTCOME_PLANNING_FAILED,
            steps_used=0,
            elapsed_sim_time=0.0,
            trajectory=traj,
            controls=(),
            mi_trace=(),
            min_clearance=_clearance(sc.start, sc.obstacles, sc.vehicle.footprint_radius),
            path_length=0.0,
            plan=None,
        )

    spacing = sc.sim.cruise_speed * dt
    dense = densify_path(plan_result.path, spacing)
    world = WorldState(
        scenario=sc,
        path=dense,
        arc=ArcPath(plan_result.path),
        vehicle=sc.start,
        obstacles=list(sc.obstacles),
        trajectory=[sc.start],
        clearances=[_clearance(sc.start, sc.obstacles, sc.vehicle.footprint_radius)],
    )

    while True:
        dx = world.vehicle.x - sc.goal[0]
        dy = world.vehicle.y - sc.goal[1]
        if math.hypot(dx, dy) <= sc.goal_tolerance:
            outcome = OUTCOME_GOAL
            break
        if world.step >= sc.sim.max_steps:
            outcome = OUTCOME_TIMEOUT
            break
        step_world(world)
        if not is_free_point(
            sc.grid, world.vehicle.position, world.obstacles, sc.vehicle.footprint_radius
        ):
            outcome = OUTCOME_COLLISION
            break

    traj = Trajectory(tuple(world.trajectory), dt)
    return RunResult(
        outcome=outcome,
        steps_used=world.step,
        elapsed_sim_time=world.step * dt,
        trajectory=traj,
        controls=tuple(world.controls),
        mi_trace=tuple(world.mi_trace),
        min_clearance=min(world.clearances),
        path_length=traj.length(),
        plan=plan_result,
        clearances=tuple(world.clearances),
        fusion_trace=tuple(world.fusion_trace),
    )


def compute_metrics(result: RunResult) -> MetricSummary:
    """Stability and safety summary of one run."""
    accel = [a for (_, a, _) in result.controls]
    steer = [d for (_, _, d) in result.controls]
    flips = sum(1 for a1, a2 in zip(accel, accel[1:]) if a1 * a2 < 0.0)
    clear = result.clearances if result.clearances else (math.inf,)
    return MetricSummary(
        outcome=result.outcome,
        steps=result.steps_used,
        completion_time_s=result.elapsed_sim_time,
        path_length_m=result.path_length,
        min_clearance_m=result.min_clearance,
        mean_clearance_m=float(np.mean(clear)) if all(map(math.isfinite, clear)) else math.inf,
        accel_variance=float(np.var(accel)) if accel else 0.0,
        steer_variance=float(np.var(steer)) if steer else 0.0,
        accel_sign_flips=flips,
    )
