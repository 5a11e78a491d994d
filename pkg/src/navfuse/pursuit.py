"""Pure-pursuit local controller with perpendicular-offset obstacle avoidance.

The lookahead target on the reference path is widened into 2n+1 candidates by
shifting it along both perpendicular unit vectors for each configured offset
distance. Among the collision-free candidates, the one closest to the path's
final point wins; the steering command follows the standard pursuit law
delta = atan(2 L sin(alpha) / L_d). When no candidate survives, the vehicle
brakes in place.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ControlInput, Trajectory, VehicleParams, VehicleState, normalize_angle, predict_trajectory
from .gridmap import is_free_point, is_free_segment, is_free_trajectory


class DegenerateTargetError(ValueError):
    """Target coincides with the vehicle position; no direction exists."""


@dataclass(frozen=True)
class PursuitConfig:
    lookahead: float = 3.0
    adjust_distances: tuple[float, ...] = (1.0, 2.0)
    curvature_gain: float = 4.0
    speed_gain: float = 1.0  # 1/s, proportional speed tracking
    horizon: int = 10
    dt: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "adjust_distances", tuple(self.adjust_distances))
        if self.lookahead <= 0:
            raise ValueError("lookahead must be positive")
        if not self.adjust_distances or any(d <= 0 for d in self.adjust_distances):
            raise ValueError("adjust_distances must be non-empty and positive")
        if self.curvature_gain < 0:
            raise ValueError("curvature_gain must be non-negative")
        if self.speed_gain <= 0:
            raise ValueError("speed_gain must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.dt <= 0:
            raise ValueError("dt must be positive")


@dataclass(frozen=True)
class PursuitDecision:
    target: tuple[float, float]
    control: ControlInput
    predicted: Trajectory
    feasible: bool


def select_target(state: VehicleState, path, lookahead: float) -> tuple[float, float]:
    """Nearest path point at or beyond the lookahead distance, limited to
    points from the vehicle's closest path index onward; falls back to the
    final point when nothing qualifies."""
    pts = np.asarray(path, dtype=float).reshape(-1, 2)
    d2 = (pts[:, 0] - state.x) ** 2 + (pts[:, 1] - state.y) ** 2
    nearest = int(np.argmin(d2))
    ahead = d2[nearest:]
    qualifying = np.nonzero(ahead >= lookahead * lookahead)[0]
    if qualifying.size == 0:
        return (float(pts[-1, 0]), float(pts[-1, 1]))
    k = nearest + int(qualifying[np.argmin(ahead[qualifying])])
    return (float(pts[k, 0]), float(pts[k, 1]))


def perpendicular_offsets(state: VehicleState, target) -> tuple[tuple[float, float], tuple[float, float]]:
    """The two unit vectors perpendicular to the vehicle->target direction."""
    dx = target[0] - state.x
    dy = target[1] - state.y
    norm = math.hypot(dx, dy)
    if norm == 0.0:
        raise DegenerateTargetError("target coincides with the vehicle position")
    v1 = (-dy / norm, dx / norm)
    return v1, (-v1[0], -v1[1])


def candidate_targets(target, v1, v2, adjust_distances) -> list[tuple[float, float]]:
    """The unmodified target first, then the v1 shifts, then the v2 shifts."""
    tx, ty = float(target[0]), float(target[1])
    out = [(tx, ty)]
    for d in adjust_distances:
        out.append((tx + d * v1[0], ty + d * v1[1]))
    for d in adjust_distances:
        out.append((tx + d * v2[0], ty + d * v2[1]))
    return out


def _menger_curvature(p1, p2, p3) -> float:
    a = math.hypot(p2[0] - p1[0], p2[1] - p1[1])
    b = math.hypot(p3[0] - p2[0], p3[1] - p2[1])
    c = math.hypot(p3[0] - p1[0], p3[1] - p1[1])
    if a == 0.0 or b == 0.0 or c == 0.0:
        return 0.0
    area2 = abs(
        (p2[0] - p1[0]) * (p3[1] - p1[1]) - (p2[1] - p1[1]) * (p3[0] - p1[0])
    )
    return 2.0 * area2 / (a * b * c)


def candidate_state(state: VehicleState, target, path, cfg: PursuitConfig,
                    params: VehicleParams) -> VehicleState:
    """Candidate pose at the (possibly shifted) target: heading is held, speed
    follows v_max / (1 + gain * |kappa|) with kappa the Menger curvature of
    the three reference points around the target."""
    pts = np.asarray(path, dtype=float).reshape(-1, 2)
    if pts.shape[0] < 3:
        kappa = 0.0
    else:
        d2 = (pts[:, 0] - target[0]) ** 2 + (pts[:, 1] - target[1]) ** 2
        j = int(np.argmin(d2))
        j = min(max(j, 1), pts.shape[0] - 2)
        kappa = _menger_curvature(pts[j - 1], pts[j], pts[j + 1])
    v = params.v_max / (1.0 + cfg.curvature_gain * abs(kappa))
    return VehicleState(float(target[0]), float(target[1]), state.theta, v)


def _braking_decision(state, target, cfg, params, feasible):
    u = ControlInput(-1.0, 0.0)
    predicted = predict_trajectory(state, u, cfg.horizon, cfg.dt, params)
    return PursuitDecision(target=target, control=u, predicted=predicted, feasible=feasible)


def pursuit_step(state: VehicleState, path, obstacles, grid, cfg: PursuitConfig,
                 params: VehicleParams) -> PursuitDecision:
    """One pursuit decision: pick the target, widen it into offset candidates,
    keep the collision-free ones, aim at the one nearest the path end.

    Candidate screening checks the candidate footprint and the straight
    segment from the current position; the final rollout must also be
    collision-free for the decision to count as feasible. With nothing
    safe the vehicle brakes in place."""
    target = select_target(state, path, cfg.lookahead)
    goal = (float(path[-1][0]), float(path[-1][1]))
    if math.hypot(target[0] - state.x, target[1] - state.y) == 0.0:
        # path exhausted under the vehicle: hold position
        return _braking_decision(state, target, cfg, params, feasible=True)
    v1, v2 = perpendicular_offsets(state, target)
    candidates = candidate_targets(target, v1, v2, cfg.adjust_distances)
    radius = params.footprint_radius
    pos = (state.x, state.y)
    survivors = [
        c
        for c in candidates
        if is_free_point(grid, c, obstacles, radius)
        and is_free_segment(grid, pos, c, obstacles, radius)
    ]
    if not survivors:
        return _braking_decision(state, target, cfg, params, feasible=False)
    chosen = min(survivors, key=lambda c: (c[0] - goal[0]) ** 2 + (c[1] - goal[1]) ** 2)
    cand = candidate_state(state, chosen, path, cfg, params)
    l_d = math.hypot(chosen[0] - state.x, chosen[1] - state.y)
    if l_d == 0.0:
        delta = 0.0
    else:
        alpha = normalize_angle(math.atan2(chosen[1] - state.y, chosen[0] - state.x) - state.theta)
        delta = math.atan(2.0 * params.wheelbase * math.sin(alpha) / l_d)
    accel = cfg.speed_gain * (cand.v - state.v)
    control = ControlInput(accel, delta)
    predicted = predict_trajectory(state, control, cfg.horizon, cfg.dt, params)
    if not is_free_trajectory(grid, predicted, obstacles, radius):
        return _braking_decision(state, chosen, cfg, params, feasible=False)
    return PursuitDecision(target=chosen, control=control, predicted=predicted, feasible=True)
