"""Scenario file loading and the versioned default configuration.

Scenario files are JSON with unit-suffixed field names. Every config block is
optional; omitted fields take the defaults below, and the fully resolved
configuration is echoed into each run artifact for provenance.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

from .core import VehicleParams, VehicleState
from .fusion import FusionConfig
from .gridmap import Obstacle, load_grid
from .mpc import MpcConfig
from .planner import PlannerConfig
from .pursuit import PursuitConfig
from .simulator import Scenario, SimConfig

CONFIG_VERSION = "1"


class ScenarioError(ValueError):
    """Scenario file violates the schema; the message names the field."""


DEFAULTS = {
    "config_version": CONFIG_VERSION,
    "goal_tolerance_m": 2.0,
    "controller": "info-fusion",
    "seeds": 1,
    "vehicle": {"wheelbase_m": 2.5, "v_max_mps": 10.0, "footprint_radius_m": 1.0},
    "planner": {
        "max_iterations": 2000,
        "step_size_m": 1.0,
        "goal_tolerance_m": 1.0,
        "rewire_radius_m": 5.0,
        "goal_bias": 0.05,
        "rng_seed": 0,
    },
    "mpc": {
        "horizon": 10,
        "dt_s": 0.1,
        "accel_grid": 9,
        "steer_grid": 9,
        "w_obs": 2.0,
        "w_dev": 1.0,
        "d_max_m": 2.0,
        "epsilon_m": 0.1,
    },
    "pursuit": {
        "lookahead_m": 3.0,
        "adjust_distances_m": [1.0, 2.0],
        "curvature_gain": 4.0,
        "speed_gain": 1.0,
        "horizon": 10,
        "dt_s": 0.1,
    },
    "fusion": {"bins": 10, "threshold": 0.85},
    "sim": {
        "dt_s": 0.1,
        "max_steps": 600,
        "cruise_speed_mps": 5.0,
        "plan_margin_m": 0.5,
        "rng_seed": 0,
    },
}


def _require(data: dict, key: str, where: str):
    if key not in data:
        raise ScenarioError(f"{where}: missing required field {key!r}")
    return data[key]


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, float) and not math.isfinite(value):
        raise ScenarioError(f"{where}: must be finite")
    return float(value)


def _integer(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{where}: expected an integer, got {value!r}")
    return value


def _block(data: dict, name: str) -> dict:
    merged = dict(DEFAULTS[name])
    extra = data.get(name, {})
    if not isinstance(extra, dict):
        raise ScenarioError(f"{name}: expected an object")
    unknown = set(extra) - set(merged)
    if unknown:
        raise ScenarioError(f"{name}: unknown fields {sorted(unknown)}")
    merged.update(extra)
    return merged


def _obstacles(data, where="obstacles") -> tuple[Obstacle, ...]:
    if not isinstance(data, list):
        raise ScenarioError(f"{where}: expected a list")
    out = []
    for i, entry in enumerate(data):
        spot = f"{where}[{i}]"
        if not isinstance(entry, dict):
            raise ScenarioError(f"{spot}: expected an object")
        x = _number(_require(entry, "x", spot), f"{spot}.x")
        y = _number(_require(entry, "y", spot), f"{spot}.y")
        radius = _number(_require(entry, "radius_m", spot), f"{spot}.radius_m")
        if radius <= 0:
            raise ScenarioError(f"{spot}.radius_m: must be > 0")
        vx = _number(entry.get("vx", 0.0), f"{spot}.vx")
        vy = _number(entry.get("vy", 0.0), f"{spot}.vy")
        out.append(Obstacle((x, y), radius, (vx, vy)))
    return tuple(out)


def scenario_from_dict(data: dict, base_dir=".") -> Scenario:
    """Build a Scenario from parsed JSON; map paths resolve against base_dir."""
    if not isinstance(data, dict):
        raise ScenarioError("scenario: expected a JSON object at top level")
    map_rel = _require(data, "map", "scenario")
    if not isinstance(map_rel, str):
        raise ScenarioError("map: expected a path string")
    map_path = Path(base_dir) / map_rel
    if not map_path.exists():
        raise ScenarioError(f"map: file not found: {map_path}")
    grid = load_grid(map_path)

    start_d = _require(data, "start", "scenario")
    goal_d = _require(data, "goal", "scenario")
    if not isinstance(start_d, dict) or not isinstance(goal_d, dict):
        raise ScenarioError("start/goal: expected objects")
    start = VehicleState(
        _number(_require(start_d, "x", "start"), "start.x"),
        _number(_require(start_d, "y", "start"), "start.y"),
        _number(start_d.get("theta", 0.0), "start.theta"),
        _number(start_d.get("v", 0.0), "start.v"),
    )
    goal = (
        _number(_require(goal_d, "x", "goal"), "goal.x"),
        _number(_require(goal_d, "y", "goal"), "goal.y"),
    )

    vehicle_d = _block(data, "vehicle")
    planner_d = _block(data, "planner")
    mpc_d = _block(data, "mpc")
    pursuit_d = _block(data, "pursuit")
    fusion_d = _block(data, "fusion")
    sim_d = _block(data, "sim")

    known = {
        "map", "start", "goal", "goal_tolerance_m", "obstacles", "controller",
        "seeds", "vehicle", "planner", "mpc", "pursuit", "fusion", "sim",
    }
    unknown = set(data) - known
    if unknown:
        raise ScenarioError(f"scenario: unknown fields {sorted(unknown)}")

    try:
        return Scenario(
            grid=grid,
            start=start,
            goal=goal,
            goal_tolerance=_number(
                data.get("goal_tolerance_m", DEFAULTS["goal_tolerance_m"]), "goal_tolerance_m"
            ),
            obstacles=_obstacles(data.get("obstacles", [])),
            controller=str(data.get("controller", DEFAULTS["controller"])),
            seeds=_integer(data.get("seeds", DEFAULTS["seeds"]), "seeds"),
            vehicle=VehicleParams(
                wheelbase=_number(vehicle_d["wheelbase_m"], "vehicle.wheelbase_m"),
                v_max=_number(vehicle_d["v_max_mps"], "vehicle.v_max_mps"),
                footprint_radius=_number(vehicle_d["footprint_radius_m"], "vehicle.footprint_radius_m"),
            ),
            planner=PlannerConfig(
                max_iterations=_integer(planner_d["max_iterations"], "planner.max_iterations"),
                step_size=_number(planner_d["step_size_m"], "planner.step_size_m"),
                goal_tolerance=_number(planner_d["goal_tolerance_m"], "planner.goal_tolerance_m"),
                rewire_radius=_number(planner_d["rewire_radius_m"], "planner.rewire_radius_m"),
                goal_bias=_number(planner_d["goal_bias"], "planner.goal_bias"),
                rng_seed=_integer(planner_d["rng_seed"], "planner.rng_seed"),
            ),
            mpc=MpcConfig(
                horizon=_integer(mpc_d["horizon"], "mpc.horizon"),
                dt=_number(mpc_d["dt_s"], "mpc.dt_s"),
                accel_grid=_integer(mpc_d["accel_grid"], "mpc.accel_grid"),
                steer_grid=_integer(mpc_d["steer_grid"], "mpc.steer_grid"),
                w_obs=_number(mpc_d["w_obs"], "mpc.w_obs"),
                w_dev=_number(mpc_d["w_dev"], "mpc.w_dev"),
                d_max=_number(mpc_d["d_max_m"], "mpc.d_max_m"),
                epsilon=_number(mpc_d["epsilon_m"], "mpc.epsilon_m"),
            ),
            pursuit=PursuitConfig(
                lookahead=_number(pursuit_d["lookahead_m"], "pursuit.lookahead_m"),
                adjust_distances=tuple(
                    _number(v, f"pursuit.adjust_distances_m[{i}]")
                    for i, v in enumerate(pursuit_d["adjust_distances_m"])
                ),
                curvature_gain=_number(pursuit_d["curvature_gain"], "pursuit.curvature_gain"),
                speed_gain=_number(pursuit_d["speed_gain"], "pursuit.speed_gain"),
                horizon=_integer(pursuit_d["horizon"], "pursuit.horizon"),
                dt=_number(pursuit_d["dt_s"], "pursuit.dt_s"),
            ),
            fusion=FusionConfig(
                bins=_integer(fusion_d["bins"], "fusion.bins"),
                threshold=_number(fusion_d["threshold"], "fusion.threshold"),
            ),
            sim=SimConfig(
                dt=_number(sim_d["dt_s"], "sim.dt_s"),
                max_steps=_integer(sim_d["max_steps"], "sim.max_steps"),
                cruise_speed=_number(sim_d["cruise_speed_mps"], "sim.cruise_speed_mps"),
                plan_margin=_number(sim_d["plan_margin_m"], "sim.plan_margin_m"),
                rng_seed=_integer(sim_d["rng_seed"], "sim.rng_seed"),
            ),
            map_path=str(map_path),
        )
    except ScenarioError:
        raise
    except ValueError as exc:
        raise ScenarioError(f"scenario: {exc}") from exc


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"scenario: cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario: {path}: line {exc.lineno}: {exc.msg}") from exc
    return scenario_from_dict(data, base_dir=path.parent)


def scenario_echo(sc: Scenario) -> dict:
    """Fully resolved scenario as a JSON-able dict (the artifact provenance echo)."""
    return {
        "config_version": CONFIG_VERSION,
        "map": sc.map_path,
        "start": {"x": sc.start.x, "y": sc.start.y, "theta": sc.start.theta, "v": sc.start.v},
        "goal": {"x": sc.goal[0], "y": sc.goal[1]},
        "goal_tolerance_m": sc.goal_tolerance,
        "obstacles": [
            {
                "x": ob.center[0],
                "y": ob.center[1],
                "radius_m": ob.radius,
                "vx": ob.velocity[0],
                "vy": ob.velocity[1],
            }
            for ob in sc.obstacles
        ],
        "controller": sc.controller,
        "seeds": sc.seeds,
        "vehicle": {
            "wheelbase_m": sc.vehicle.wheelbase,
            "v_max_mps": sc.vehicle.v_max,
            "footprint_radius_m": sc.vehicle.footprint_radius,
        },
        "planner": {
            "max_iterations": sc.planner.max_iterations,
            "step_size_m": sc.planner.step_size,
            "goal_tolerance_m": sc.planner.goal_tolerance,
            "rewire_radius_m": sc.planner.rewire_radius,
            "goal_bias": sc.planner.goal_bias,
            "rng_seed": sc.planner.rng_seed,
        },
        "mpc": {
            "horizon": sc.mpc.horizon,
            "dt_s": sc.mpc.dt,
            "accel_grid": sc.mpc.accel_grid,
            "steer_grid": sc.mpc.steer_grid,
            "w_obs": sc.mpc.w_obs,
            "w_dev": sc.mpc.w_dev,
            "d_max_m": sc.mpc.d_max,
            "epsilon_m": sc.mpc.epsilon,
        },
        "pursuit": {
            "lookahead_m": sc.pursuit.lookahead,
            "adjust_distances_m": list(sc.pursuit.adjust_distances),
            "curvature_gain": sc.pursuit.curvature_gain,
            "speed_gain": sc.pursuit.speed_gain,
            "horizon": sc.pursuit.horizon,
            "dt_s": sc.pursuit.dt,
        },
        "fusion": {"bins": sc.fusion.bins, "threshold": sc.fusion.threshold},
        "sim": {
            "dt_s": sc.sim.dt,
            "max_steps": sc.sim.max_steps,
            "cruise_speed_mps": sc.sim.cruise_speed,
            "plan_margin_m": sc.sim.plan_margin,
            "rng_seed": sc.sim.rng_seed,
        },
    }
