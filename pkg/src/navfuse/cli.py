"""Command-line surface: plan, run, compare.

Exit codes are disjoint across all subcommands:
  0  success (plan found / goal reached / comparison written)
  1  input error (bad file, bad schema, occupied endpoint, unknown controller)
  2  planning failure (no path within the iteration budget)
  3  run ended in timeout or collision
"""

from __future__ import annotations

import argparse
import json
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .gridmap import MapFormatError, load_grid
from .mpc import MpcConfig
from .planner import (
    InvalidEndpointError,
    PlannerConfig,
    PlanningFailedError,
    format_plan_result,
    plan,
)
from .core import VehicleParams
from .scenario_io import CONFIG_VERSION, DEFAULTS, ScenarioError, load_scenario, scenario_echo
from .simulator import (
    OUTCOME_GOAL,
    OUTCOME_PLANNING_FAILED,
    RunResult,
    Scenario,
    canonical_controller,
    compute_metrics,
    run_scenario,
)
from .svgplot import timeseries_svg, trajectory_overlay_svg

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_PLANNING = 2
EXIT_NOT_REACHED = 3


def _fmt(x) -> str:
    return repr(float(x))


def _parse_point(text: str, name: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ScenarioError(f"{name}: expected 'x,y', got {text!r}")
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError as exc:
        raise ScenarioError(f"{name}: {exc}") from exc


def write_trajectory_csv(path: Path, result: RunResult) -> None:
    lines = ["step,t_s,x_m,y_m,theta_rad,v_mps"]
    for k, s in enumerate(result.trajectory.states):
        t = k * result.trajectory.dt
        lines.append(f"{k},{_fmt(t)},{_fmt(s.x)},{_fmt(s.y)},{_fmt(s.theta)},{_fmt(s.v)}")
    path.write_text("\n".join(lines) + "\n")


def write_controls_csv(path: Path, result: RunResult) -> None:
    lines = ["step,t_s,a_mps2,delta_rad"]
    for k, (t, a, d) in enumerate(result.controls):
        lines.append(f"{k},{_fmt(t)},{_fmt(a)},{_fmt(d)}")
    path.write_text("\n".join(lines) + "\n")


def write_mi_csv(path: Path, result: RunResult) -> None:
    lines = ["step,dim,H_p_bits,H_m_bits,mi_bits,nmi,gated"]
    for k, report in enumerate(result.mi_trace):
        for dim, e in report.items():
            lines.append(
                f"{k},{dim},{_fmt(e.h_p)},{_fmt(e.h_m)},{_fmt(e.mi)},{_fmt(e.nmi)},{int(e.gated)}"
            )
    path.write_text("\n".join(lines) + "\n")


def build_artifact(sc: Scenario, result: RunResult) -> dict:
    metrics = compute_metrics(result)
    return {
        "tool": "navfuse",
        "version": __version__,
        "config_version": CONFIG_VERSION,
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "scenario": scenario_echo(sc),
        "result": {
            "outcome": result.outcome,
            "steps_used": result.steps_used,
            "elapsed_sim_time_s": result.elapsed_sim_time,
            "path_length_m": result.path_length,
            "min_clearance_m": result.min_clearance,
            "plan_cost_m": result.plan.cost if result.plan else None,
            "plan_iterations": result.plan.iterations_used if result.plan else None,
        },
        "metrics": metrics.to_dict(),
    }


def write_run_artifacts(out_dir: Path, sc: Scenario, result: RunResult) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    p = out_dir / "trajectory.csv"
    write_trajectory_csv(p, result)
    written.append(p)
    p = out_dir / "controls.csv"
    write_controls_csv(p, result)
    written.append(p)
    if sc.controller == "info-fusion":
        p = out_dir / "mi.csv"
        write_mi_csv(p, result)
        written.append(p)
    p = out_dir / "summary.json"
    p.write_text(json.dumps(build_artifact(sc, result), indent=2) + "\n")
    written.append(p)
    return written


def cmd_plan(map_path, start, goal, config_path=None, out_path=None) -> int:
    try:
        grid = load_grid(map_path)
    except FileNotFoundError:
        print(f"error: map file not found: {map_path}", file=sys.stderr)
        return EXIT_INPUT
    except MapFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    planner_block = dict(DEFAULTS["planner"])
    vehicle_block = dict(DEFAULTS["vehicle"])
    if config_path:
        try:
            cfg_data = json.loads(Path(config_path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: config: {exc}", file=sys.stderr)
            return EXIT_INPUT
        planner_block.update(cfg_data.get("planner", {}))
        vehicle_block.update(cfg_data.get("vehicle", {}))

    cfg = PlannerConfig(
        max_iterations=planner_block["max_iterations"],
        step_size=planner_block["step_size_m"],
        goal_tolerance=planner_block["goal_tolerance_m"],
        rewire_radius=planner_block["rewire_radius_m"],
        goal_bias=planner_block["goal_bias"],
        rng_seed=planner_block["rng_seed"],
    )
    radius = VehicleParams(
        wheelbase=vehicle_block["wheelbase_m"],
        v_max=vehicle_block["v_max_mps"],
        footprint_radius=vehicle_block["footprint_radius_m"],
    ).footprint_radius

    try:
        result = plan(grid, start, goal, cfg, (), radius)
    except InvalidEndpointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PlanningFailedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PLANNING

    text = format_plan_result(result)
    if out_path:
        Path(out_path).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_run(scenario_path, out_dir) -> int:
    try:
        sc = load_scenario(scenario_path)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        result = run_scenario(sc)
    except InvalidEndpointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    write_run_artifacts(Path(out_dir), sc, result)
    print(f"outcome: {result.outcome} after {result.steps_used} steps "
          f"({result.elapsed_sim_time:.1f} s, {result.path_length:.1f} m)")
    if result.outcome == OUTCOME_GOAL:
        return EXIT_OK
    if result.outcome == OUTCOME_PLANNING_FAILED:
        return EXIT_PLANNING
    return EXIT_NOT_REACHED


def _run_one(args) -> tuple[str, int, RunResult]:
    sc, controller, seed = args
    variant = replace(
        sc, controller=controller, sim=replace(sc.sim, rng_seed=seed),
        planner=replace(sc.planner, rng_seed=seed),
    )
    return controller, seed, run_scenario(variant)


def run_matrix(sc: Scenario, controllers, seeds, jobs=1):
    """Every (controller, seed) run, collected in deterministic task order."""
    tasks = [(sc, c, s) for c in controllers for s in seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_run_one, tasks))
    return [_run_one(t) for t in tasks]


def write_comparison_csv(path: Path, rows) -> None:
    header = (
        "controller,runs,successes,median_time_s,median_min_clearance_m,"
        "accel_var,steer_var,accel_sign_flips"
    )
    lines = [header]
    for r in rows:
        lines.append(
            f"{r['controller']},{r['runs']},{r['successes']},{_fmt(r['median_time_s'])},"
            f"{_fmt(r['median_min_clearance_m'])},{_fmt(r['accel_var'])},"
            f"{_fmt(r['steer_var'])},{_fmt(r['accel_sign_flips'])}"
        )
    path.write_text("\n".join(lines) + "\n")


def summarize_controller(controller: str, results) -> dict:
    metrics = [compute_metrics(r) for _, _, r in results]
    return {
        "controller": controller,
        "runs": len(metrics),
        "successes": sum(1 for m in metrics if m.outcome == OUTCOME_GOAL),
        "median_time_s": statistics.median(m.completion_time_s for m in metrics),
        "median_min_clearance_m": statistics.median(m.min_clearance_m for m in metrics),
        "accel_var": statistics.median(m.accel_variance for m in metrics),
        "steer_var": statistics.median(m.steer_variance for m in metrics),
        "accel_sign_flips": statistics.median(m.accel_sign_flips for m in metrics),
    }


def cmd_compare(scenario_path, controllers, seeds_count, out_dir, jobs=1) -> int:
    try:
        sc = load_scenario(scenario_path)
        controllers = [canonical_controller(c) for c in controllers]
    except (ScenarioError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if seeds_count is None:
        seeds_count = sc.seeds
    if seeds_count < 1 or not controllers:
        print("error: need at least one controller and one seed", file=sys.stderr)
        return EXIT_INPUT

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seeds = range(sc.sim.rng_seed, sc.sim.rng_seed + seeds_count)
    try:
        results = run_matrix(sc, controllers, seeds, jobs=jobs)
    except InvalidEndpointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    rows = []
    per_controller = {c: [] for c in controllers}
    for controller, seed, result in results:
        per_controller[controller].append((controller, seed, result))
        variant = replace(sc, controller=controller, sim=replace(sc.sim, rng_seed=seed))
        write_run_artifacts(out / controller / f"seed_{seed}", variant, result)
    for controller in controllers:
        rows.append(summarize_controller(controller, per_controller[controller]))
    write_comparison_csv(out / "comparison.csv", rows)

    # figure-style companions from each controller's first seed
    overlay = {
        f"{c} (seed {seeds[0]})": [s.position for s in per_controller[c][0][2].trajectory.states]
        for c in controllers
    }
    first_plan = per_controller[controllers[0]][0][2].plan
    (out / "trajectories.svg").write_text(
        trajectory_overlay_svg(
            sc.grid, overlay, sc.obstacles, first_plan.path if first_plan else None
        )
    )
    accel = {
        c: (
            [t for t, _, _ in per_controller[c][0][2].controls],
            [a for _, a, _ in per_controller[c][0][2].controls],
        )
        for c in controllers
    }
    steer = {
        c: (
            [t for t, _, _ in per_controller[c][0][2].controls],
            [d for _, _, d in per_controller[c][0][2].controls],
        )
        for c in controllers
    }
    (out / "acceleration.svg").write_text(timeseries_svg(accel, "acceleration vs time", "a [m/s^2]"))
    (out / "steering.svg").write_text(timeseries_svg(steer, "steering angle vs time", "delta [rad]"))

    for r in rows:
        print(
            f"{r['controller']:12s} runs={r['runs']} ok={r['successes']} "
            f"median_time={r['median_time_s']:.1f}s accel_var={r['accel_var']:.4f} "
            f"steer_var={r['steer_var']:.4f} flips={r['accel_sign_flips']:.1f}"
        )
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="navfuse", description=__doc__)
    parser.add_argument("--version", action="version", version=f"navfuse {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_plan = sub.add_parser("plan", help="plan a global path on a map")
    p_plan.add_argument("--map", required=True)
    p_plan.add_argument("--start", required=True, help="x,y")
    p_plan.add_argument("--goal", required=True, help="x,y")
    p_plan.add_argument("--config", default=None, help="JSON with planner/vehicle blocks")
    p_plan.add_argument("--out", default=None, help="path export file (stdout if omitted)")

    p_run = sub.add_parser("run", help="run one scenario")
    p_run.add_argument("scenario")
    p_run.add_argument("--out", required=True, help="artifact directory")

    p_cmp = sub.add_parser("compare", help="run a controller/seed matrix")
    p_cmp.add_argument("scenario")
    p_cmp.add_argument("--controllers", default="mpc-basic,pursuit,info-fusion")
    p_cmp.add_argument("--seeds", type=int, default=None, help="seed count (default: scenario's)")
    p_cmp.add_argument("--out", required=True)
    p_cmp.add_argument("--jobs", type=int, default=1)

    args = parser.parse_args(argv)
    if args.command == "plan":
        try:
            start = _parse_point(args.start, "start")
            goal = _parse_point(args.goal, "goal")
        except ScenarioError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INPUT
        return cmd_plan(args.map, start, goal, args.config, args.out)
    if args.command == "run":
        return cmd_run(args.scenario, args.out)
    if args.command == "compare":
        controllers = [c for c in args.controllers.split(",") if c]
        return cmd_compare(args.scenario, controllers, args.seeds, args.out, args.jobs)
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
