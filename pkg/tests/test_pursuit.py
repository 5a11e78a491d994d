"""Pursuit controller tests: target selection, offset geometry, candidate scoring."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from navfuse.core import VehicleParams, VehicleState
from navfuse.gridmap import Obstacle, OccupancyGrid, is_free_point, is_free_segment
from navfuse.pursuit import (
    DegenerateTargetError,
    PursuitConfig,
    candidate_state,
    candidate_targets,
    perpendicular_offsets,
    pursuit_step,
    select_target,
)

PARAMS = VehicleParams(wheelbase=2.5, v_max=10.0, footprint_radius=1.0)


def empty_grid(n=50):
    return OccupancyGrid(n, n, 1.0, np.zeros((n, n), dtype=bool))


class TestSelectTarget:
    def test_constrained_argmin(self):
        state = VehicleState(0, 0, 0, 1)
        path = [(0.5, 0.0), (1.0, 0.0), (2.0, 0.0)]
        assert select_target(state, path, 1.5) == (2.0, 0.0)

    def test_all_within_lookahead_falls_back_to_last(self):
        state = VehicleState(0, 0, 0, 1)
        path = [(0.5, 0.0), (1.0, 0.0), (2.0, 0.0)]
        assert select_target(state, path, 10.0) == (2.0, 0.0)

    def test_single_point_path(self):
        state = VehicleState(0, 0, 0, 1)
        assert select_target(state, [(3.0, 4.0)], 1.0) == (3.0, 4.0)

    def test_points_behind_nearest_index_are_ignored(self):
        # vehicle sits next to index 2; the qualifying point behind must lose
        state = VehicleState(5.0, 0.0, 0, 1)
        path = [(0.0, 0.0), (2.5, 0.0), (5.0, 0.0), (7.0, 0.0), (9.0, 0.0)]
        assert select_target(state, path, 1.5) == (7.0, 0.0)

    def test_result_at_or_beyond_lookahead_when_possible(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            state = VehicleState(float(rng.uniform(0, 10)), float(rng.uniform(0, 10)), 0, 1)
            path = [tuple(rng.uniform(0, 20, size=2)) for _ in range(8)]
            lookahead = float(rng.uniform(0.5, 6))
            t = select_target(state, path, lookahead)
            d2 = [(p[0] - state.x) ** 2 + (p[1] - state.y) ** 2 for p in path]
            nearest = int(np.argmin(d2))
            any_qualify = any(
                math.dist(p, (state.x, state.y)) >= lookahead for p in path[nearest:]
            )
            if any_qualify:
                assert math.dist(t, (state.x, state.y)) >= lookahead


class TestPerpendicularOffsets:
    def test_axis_cases(self):
        s = VehicleState(0, 0, 0, 1)
        v1, v2 = perpendicular_offsets(s, (1.0, 0.0))
        assert v1 == (0.0, 1.0) and v2 == (0.0, -1.0)
        v1, v2 = perpendicular_offsets(s, (0.0, 2.0))
        assert v1 == (-1.0, 0.0) and v2 == (1.0, 0.0)

    def test_three_four_five(self):
        s = VehicleState(0, 0, 0, 1)
        v1, v2 = perpendicular_offsets(s, (3.0, 4.0))
        assert v1[0] == pytest.approx(-0.8, abs=1e-12)
        assert v1[1] == pytest.approx(0.6, abs=1e-12)
        assert v2[0] == pytest.approx(0.8, abs=1e-12)
        assert v2[1] == pytest.approx(-0.6, abs=1e-12)

    def test_degenerate_target(self):
        s = VehicleState(1, 2, 0, 1)
        with pytest.raises(DegenerateTargetError):
            perpendicular_offsets(s, (1.0, 2.0))

    @given(st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50), st.floats(-50, 50))
    @settings(max_examples=200)
    def test_orthogonal_unit_opposite(self, x, y, tx, ty):
        if math.hypot(tx - x, ty - y) < 1e-6:
            return
        s = VehicleState(x, y, 0, 1)
        v1, v2 = perpendicular_offsets(s, (tx, ty))
        dx, dy = tx - x, ty - y
        assert abs(v1[0] * dx + v1[1] * dy) <= 1e-9 * max(1.0, abs(dx), abs(dy))
        assert abs(math.hypot(*v1) - 1.0) <= 1e-12
        assert abs(math.hypot(*v2) - 1.0) <= 1e-12
        assert v2 == (-v1[0], -v1[1])


class TestCandidateTargets:
    def test_single_offset(self):
        out = candidate_targets((5.0, 0.0), (0.0, 1.0), (0.0, -1.0), [1.0])
        assert out == [(5.0, 0.0), (5.0, 1.0), (5.0, -1.0)]

    def test_cardinality(self):
        out = candidate_targets((0.0, 0.0), (0.0, 1.0), (0.0, -1.0), [1.0, 2.0])
        assert len(out) == 5
        assert out[0] == (0.0, 0.0)

    def test_empty_offsets_forbidden_by_config(self):
        with pytest.raises(ValueError):
            PursuitConfig(adjust_distances=())


class TestCandidateState:
    CFG = PursuitConfig(curvature_gain=1.0)

    def test_straight_reference_full_speed(self):
        s = VehicleState(0, 0, 0.3, 1)
        path = [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)]
        cand = candidate_state(s, (2.0, 0.0), path, self.CFG, PARAMS)
        assert cand.v == PARAMS.v_max
        assert cand.theta == s.theta
        assert cand.position == (2.0, 0.0)

    def test_unit_curvature_halves_speed(self):
        # circle of radius 1 through (0,0), (1,1), (2,0): kappa = 1
        s = VehicleState(0, 0, 0, 1)
        path = [(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]
        cand = candidate_state(s, (1.0, 1.0), path, self.CFG, PARAMS)
        assert cand.v == pytest.approx(PARAMS.v_max / 2, abs=1e-12)

    def test_gain_off_ignores_curvature(self):
        cfg = PursuitConfig(curvature_gain=0.0)
        s = VehicleState(0, 0, 0, 1)
        path = [(0.0, 0.0), (1.0, 1.0), (2.0, 0.0)]
        cand = candidate_state(s, (1.0, 1.0), path, cfg, PARAMS)
        assert cand.v == PARAMS.v_max

    def test_collinear_and_short_paths_are_zero_curvature(self):
        s = VehicleState(0, 0, 0, 1)
        cand = candidate_state(s, (1.0, 0.0), [(0.0, 0.0), (2.0, 0.0)], self.CFG, PARAMS)
        assert cand.v == PARAMS.v_max


class TestPursuitStep:
    CFG = PursuitConfig(lookahead=3.0, adjust_distances=(1.0, 2.0), horizon=10, dt=0.1)

    def straight_path(self):
        return [(float(x), 25.0) for x in range(5, 46)]

    def test_free_straight_path_keeps_target_and_steers_straight(self):
        grid = empty_grid()
        state = VehicleState(10.0, 25.0, 0.0, 5.0)
        dec = pursuit_step(state, self.straight_path(), [], grid, self.CFG, PARAMS)
        assert dec.feasible
        assert dec.target == (13.0, 25.0)  # nearest point at >= lookahead
        assert dec.control.delta == 0.0

    def test_blocked_target_moves_to_offset(self):
        grid = empty_grid()
        state = VehicleState(10.0, 25.0, 0.0, 1.0)
        blocker = Obstacle((13.0, 25.0), 0.4)
        dec = pursuit_step(state, self.straight_path(), [blocker], grid, self.CFG, PARAMS)
        assert dec.feasible
        assert dec.target != (13.0, 25.0)
        # re-check the documented selection rule: free candidates only,
        # minimal distance to the path end, ties by list order
        goal = (45.0, 25.0)
        from navfuse.pursuit import candidate_targets as ct, perpendicular_offsets as po

        v1, v2 = po(state, (13.0, 25.0))
        cands = ct((13.0, 25.0), v1, v2, self.CFG.adjust_distances)
        free = [
            c
            for c in cands
            if is_free_point(grid, c, [blocker], PARAMS.footprint_radius)
            and is_free_segment(grid, (state.x, state.y), c, [blocker], PARAMS.footprint_radius)
        ]
        best = min(free, key=lambda c: (c[0] - goal[0]) ** 2 + (c[1] - goal[1]) ** 2)
        assert dec.target == best

    def test_everything_blocked_brakes_in_place(self):
        grid = empty_grid()
        state = VehicleState(10.0, 25.0, 0.0, 5.0)
        wall = Obstacle((13.0, 25.0), 6.0)
        dec = pursuit_step(state, self.straight_path(), [wall], grid, self.CFG, PARAMS)
        assert not dec.feasible
        assert (dec.control.a, dec.control.delta) == (-1.0, 0.0)

    def test_steering_sign_follows_target_side(self):
        grid = empty_grid()
        state = VehicleState(10.0, 25.0, 0.0, 5.0)
        left_path = [(10.0 + x, 25.0 + x) for x in range(0, 30)]
        right_path = [(10.0 + x, 25.0 - x) for x in range(0, 30)]
        dec_left = pursuit_step(state, left_path, [], grid, self.CFG, PARAMS)
        dec_right = pursuit_step(state, right_path, [], grid, self.CFG, PARAMS)
        assert dec_left.control.delta > 0
        assert dec_right.control.delta < 0

    def test_selection_optimality_recheck(self):
        grid = empty_grid()
        rng = np.random.default_rng(31)
        path = self.straight_path()
        goal = path[-1]
        for _ in range(50):
            state = VehicleState(
                float(rng.uniform(8, 40)), float(rng.uniform(23, 27)), float(rng.uniform(-0.5, 0.5)), 4.0
            )
            obstacles = [
                Obstacle((float(rng.uniform(10, 44)), float(rng.uniform(22, 28))), float(rng.uniform(0.5, 1.5)))
                for _ in range(2)
            ]
            if not is_free_point(grid, (state.x, state.y), obstacles, PARAMS.footprint_radius):
                continue
            dec = pursuit_step(state, path, obstacles, grid, self.CFG, PARAMS)
            if not dec.feasible:
                continue
            t = select_target(state, path, self.CFG.lookahead)
            v1, v2 = perpendicular_offsets(state, t)
            cands = candidate_targets(t, v1, v2, self.CFG.adjust_distances)
            free = [
                c
                for c in cands
                if is_free_point(grid, c, obstacles, PARAMS.footprint_radius)
                and is_free_segment(grid, (state.x, state.y), c, obstacles, PARAMS.footprint_radius)
            ]
            assert dec.target in free
            dist_chosen = math.dist(dec.target, goal)
            assert all(dist_chosen <= math.dist(c, goal) + 1e-12 for c in free)

    def test_path_exhausted_under_vehicle_holds_position(self):
        grid = empty_grid()
        state = VehicleState(45.0, 25.0, 0.0, 0.0)
        dec = pursuit_step(state, [(45.0, 25.0)], [], grid, self.CFG, PARAMS)
        assert dec.feasible
        assert dec.control.a == -1.0
        assert dec.predicted.states[-1].position == (45.0, 25.0)
