"""CLI surface tests: exit codes, artifact files, determinism, schema errors."""

import json
import math
from collections import deque
from pathlib import Path

import numpy as np
import pytest

from navfuse.cli import main
from navfuse.scenario_io import ScenarioError, load_scenario, scenario_echo

REPO = Path(__file__).resolve().parent.parent


def write_map(path: Path, occ):
    h = len(occ)
    w = len(occ[0])
    rows = ["".join("#" if c else "." for c in row) for row in occ]
    path.write_text(f"{w} {h} 1.0\n" + "\n".join(rows) + "\n")


def empty_map(path: Path, n=50):
    write_map(path, [[False] * n for _ in range(n)])


def walled_goal_map(path: Path, n=50):
    occ = [[False] * n for _ in range(n)]
    for i in range(30, 41):
        occ[30][i] = occ[40][i] = True
        occ[i][30] = occ[i][40] = True
    write_map(path, occ)
    return occ


def fast_scenario(tmp_path: Path, controller="info-fusion", **overrides):
    map_path = tmp_path / "map.txt"
    empty_map(map_path)
    data = {
        "map": "map.txt",
        "start": {"x": 5.0, "y": 5.0, "theta": 0.7853981633974483, "v": 0.0},
        "goal": {"x": 45.0, "y": 45.0},
        "goal_tolerance_m": 2.0,
        "obstacles": [{"x": 30.0, "y": 20.0, "radius_m": 1.5, "vx": 0.0, "vy": 0.0}],
        "controller": controller,
        "seeds": 2,
        "vehicle": {"wheelbase_m": 2.5, "v_max_mps": 5.0, "footprint_radius_m": 1.0},
        "planner": {
            "max_iterations": 500,
            "step_size_m": 1.0,
            "goal_tolerance_m": 1.0,
            "rewire_radius_m": 5.0,
            "goal_bias": 0.05,
            "rng_seed": 0,
        },
        "sim": {"dt_s": 0.1, "max_steps": 400, "cruise_speed_mps": 5.0,
                "plan_margin_m": 0.5, "rng_seed": 0},
    }
    data.update(overrides)
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(data))
    return path


def bfs_reachable(occ, start_cell, goal_cell):
    n = len(occ)
    seen = {start_cell}
    queue = deque([start_cell])
    while queue:
        x, y = queue.popleft()
        if (x, y) == goal_cell:
            return True
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nx, ny = x + dx, y + dy
            if 0 <= nx < n and 0 <= ny < n and not occ[ny][nx] and (nx, ny) not in seen:
                seen.add((nx, ny))
                queue.append((nx, ny))
    return False


class TestCmdPlan:
    def test_success_writes_path_and_summary(self, tmp_path, capsys):
        m = tmp_path / "m.txt"
        empty_map(m)
        out = tmp_path / "path.txt"
        code = main(["plan", "--map", str(m), "--start", "5,5", "--goal", "45,45", "--out", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) >= 3  # two waypoints plus the summary line
        assert lines[-1].startswith("cost=")

    def test_occupied_goal_is_input_error_naming_goal(self, tmp_path, capsys):
        m = tmp_path / "m.txt"
        occ = [[False] * 50 for _ in range(50)]
        occ[25][25] = True
        write_map(m, occ)
        code = main(["plan", "--map", str(m), "--start", "5,5", "--goal", "25.5,25.5"])
        assert code == 1
        assert "25.5" in capsys.readouterr().err

    def test_walled_goal_is_planning_failure(self, tmp_path):
        m = tmp_path / "m.txt"
        occ = walled_goal_map(m)
        # oracle: flood fill proves the goal chamber is sealed
        assert not bfs_reachable(occ, (5, 5), (35, 35))
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"planner": {"max_iterations": 300}}))
        code = main(["plan", "--map", str(m), "--start", "5,5", "--goal", "35.5,35.5",
                     "--config", str(cfg)])
        assert code == 2

    def test_missing_map(self, tmp_path):
        code = main(["plan", "--map", str(tmp_path / "none.txt"), "--start", "1,1", "--goal", "2,2"])
        assert code == 1

    def test_bad_point_syntax(self, tmp_path):
        m = tmp_path / "m.txt"
        empty_map(m)
        assert main(["plan", "--map", str(m), "--start", "oops", "--goal", "2,2"]) == 1


class TestCmdRun:
    def test_fusion_run_writes_four_artifacts(self, tmp_path):
        sc = fast_scenario(tmp_path, "info-fusion")
        out = tmp_path / "out"
        code = main(["run", str(sc), "--out", str(out)])
        assert code == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == ["controls.csv", "mi.csv", "summary.json", "trajectory.csv"]
        summary = json.loads((out / "summary.json").read_text())
        assert summary["result"]["outcome"] == "goal-reached"
        assert summary["scenario"]["controller"] == "info-fusion"

    def test_non_fusion_run_omits_mi_csv(self, tmp_path):
        sc = fast_scenario(tmp_path, "pursuit")
        out = tmp_path / "out"
        assert main(["run", str(sc), "--out", str(out)]) == 0
        assert not (out / "mi.csv").exists()

    def test_timeout_is_exit_3(self, tmp_path):
        sc = fast_scenario(tmp_path, "mpc-basic",
                           sim={"dt_s": 0.1, "max_steps": 1, "cruise_speed_mps": 5.0,
                                "plan_margin_m": 0.5, "rng_seed": 0})
        out = tmp_path / "out"
        code = main(["run", str(sc), "--out", str(out)])
        assert code == 3
        summary = json.loads((out / "summary.json").read_text())
        assert summary["result"]["outcome"] == "timeout"

    def test_missing_map_is_input_error(self, tmp_path):
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({
            "map": "nope.txt",
            "start": {"x": 1, "y": 1},
            "goal": {"x": 2, "y": 2},
        }))
        assert main(["run", str(path), "--out", str(tmp_path / "out")]) == 1

    def test_schema_violation_names_field(self, tmp_path, capsys):
        m = tmp_path / "map.txt"
        empty_map(m)
        path = tmp_path / "scenario.json"
        path.write_text(json.dumps({
            "map": "map.txt",
            "start": {"x": 5, "y": 5},
            "goal": {"x": 45, "y": 45},
            "obstacles": [{"x": 10, "y": 10, "radius_m": -1}],
        }))
        assert main(["run", str(path), "--out", str(tmp_path / "out")]) == 1
        assert "obstacles[0].radius_m" in capsys.readouterr().err

    def test_csv_headers_and_column_counts(self, tmp_path):
        sc = fast_scenario(tmp_path, "info-fusion")
        out = tmp_path / "out"
        main(["run", str(sc), "--out", str(out)])
        traj = (out / "trajectory.csv").read_text().splitlines()
        assert traj[0] == "step,t_s,x_m,y_m,theta_rad,v_mps"
        assert all(len(line.split(",")) == 6 for line in traj)
        ctrl = (out / "controls.csv").read_text().splitlines()
        assert ctrl[0] == "step,t_s,a_mps2,delta_rad"
        assert all(len(line.split(",")) == 4 for line in ctrl)
        mi = (out / "mi.csv").read_text().splitlines()
        assert mi[0] == "step,dim,H_p_bits,H_m_bits,mi_bits,nmi,gated"
        assert all(len(line.split(",")) == 7 for line in mi)
        # four dimensions per control step
        assert len(mi) - 1 == 4 * (len(ctrl) - 1)

    def test_determinism_byte_identical(self, tmp_path):
        sc = fast_scenario(tmp_path, "info-fusion")
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["run", str(sc), "--out", str(out1)]) == 0
        assert main(["run", str(sc), "--out", str(out2)]) == 0
        for name in ("trajectory.csv", "controls.csv", "mi.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestCmdCompare:
    def test_matrix_artifacts_and_table(self, tmp_path):
        sc = fast_scenario(tmp_path)
        out = tmp_path / "cmp"
        code = main(["compare", str(sc), "--controllers", "mpc-basic,pursuit,info-fusion",
                     "--seeds", "5", "--out", str(out)])
        assert code == 0
        table = (out / "comparison.csv").read_text().splitlines()
        assert table[0].startswith("controller,runs,successes,median_time_s")
        assert len(table) == 4  # header + 3 controllers
        run_dirs = [p for c in ("mpc-basic", "pursuit", "info-fusion") for p in (out / c).iterdir()]
        assert len(run_dirs) == 15
        for p in run_dirs:
            assert (p / "summary.json").exists()
        for name in ("trajectories.svg", "acceleration.svg", "steering.svg"):
            assert (out / name).stat().st_size > 0

    def test_single_cell_matrix(self, tmp_path):
        sc = fast_scenario(tmp_path)
        out = tmp_path / "cmp"
        code = main(["compare", str(sc), "--controllers", "pursuit", "--seeds", "1",
                     "--out", str(out)])
        assert code == 0
        table = (out / "comparison.csv").read_text().splitlines()
        assert len(table) == 2

    def test_unknown_controller_rejected_before_running(self, tmp_path):
        sc = fast_scenario(tmp_path)
        out = tmp_path / "cmp"
        code = main(["compare", str(sc), "--controllers", "warp-drive", "--out", str(out)])
        assert code == 1
        assert not (out / "comparison.csv").exists()


class TestArtifactRoundTrip:
    def test_summary_round_trips(self, tmp_path):
        sc_path = fast_scenario(tmp_path)
        out = tmp_path / "out"
        main(["run", str(sc_path), "--out", str(out)])
        text = (out / "summary.json").read_text()
        data = json.loads(text)
        assert json.loads(json.dumps(data)) == data

    def test_scenario_echo_matches_loaded_scenario(self, tmp_path):
        sc_path = fast_scenario(tmp_path)
        sc = load_scenario(sc_path)
        echo = scenario_echo(sc)
        assert echo["controller"] == "info-fusion"
        assert echo["vehicle"]["v_max_mps"] == 5.0
        assert echo["sim"]["plan_margin_m"] == 0.5


class TestShippedScenarios:
    @pytest.mark.parametrize("name", ["easy", "easy_dynamic", "medium", "hard"])
    def test_scenarios_load(self, name):
        sc = load_scenario(REPO / "scenarios" / f"{name}.json")
        assert sc.grid.width == 50
        assert sc.controller == "info-fusion"
