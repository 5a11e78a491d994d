"""Grid-search model-predictive controller.

Every control pair on a uniform grid over [-1, 1] x [-pi/4, pi/4] (endpoints
included, acceleration outer loop, steering inner loop) is rolled out over the
horizon under a held control. Rollouts that collide are discarded; the rest
are scored with

    sum_{i=1..N} [ |p_i - p_i_ref|^2 + C_obs(i) + C_dev(i) ]

where C_obs = w_obs * theta_obs / (d_obs + eps) against the nearest obstacle
and C_dev = w_dev * max(0, |p_i - p_i_ref| - d_max)^2. Ties are broken by
smallest |steer|, then smallest |accel|, then grid order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import ControlInput, Trajectory, VehicleParams, VehicleState, normalize_angle, predict_trajectory
from .gridmap import free_rollout_mask


class ReferenceExhaustedError(ValueError):
    """The reference trajectory is shorter than the prediction horizon."""


@dataclass(frozen=True)
class MpcConfig:
    horizon: int = 10
    dt: float = 0.1
    accel_grid: int = 9
    steer_grid: int = 9
    w_obs: float = 2.0
    w_dev: float = 1.0
    d_max: float = 2.0
    epsilon: float = 0.1

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.accel_grid < 2 or self.steer_grid < 2:
            raise ValueError("control grids need at least 2 samples each")
        if self.w_obs < 0 or self.w_dev < 0:
            raise ValueError("weights must be non-negative")
        if self.d_max <= 0:
            raise ValueError("d_max must be positive")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class MpcDecision:
    control: ControlInput
    predicted: Trajectory
    cost: float
    feasible: bool


def control_grid(cfg: MpcConfig) -> tuple[np.ndarray, np.ndarray]:
    """The evaluated (accel, steer) sample values, endpoints included."""
    a_vals = np.linspace(-1.0, 1.0, cfg.accel_grid)
    d_vals = np.linspace(-math.pi / 4.0, math.pi / 4.0, cfg.steer_grid)
    return a_vals, d_vals


def _obstacle_term(x, y, theta, obs_xyr, w_obs, epsilon, footprint_radius):
    if not obs_xyr:
        return 0.0
    best_d = math.inf
    best = None
    for ox, oy, orad in obs_xyr:
        d = math.hypot(ox - x, oy - y) - orad - footprint_radius
        if d < best_d:
            best_d = d
            best = (ox, oy)
    d_obs = best_d if best_d > 0.0 else 0.0
    bearing = math.atan2(best[1] - y, best[0] - x)
    theta_obs = abs(normalize_angle(bearing - theta))
    return w_obs * (1.0 / (d_obs + epsilon)) * theta_obs


def obstacle_cost(state: VehicleState, obstacles, w_obs, epsilon, footprint_radius=0.0) -> float:
    """Proximity penalty against the nearest obstacle only.

    d_obs is the surface distance (center distance minus both radii,
    floored at 0); theta_obs is the absolute bearing offset from the
    vehicle heading, in [0, pi]. Note the literal form zeroes the penalty
    for an obstacle dead ahead; collision validation covers that case.
    """
    obs = [(ob.center[0], ob.center[1], ob.radius) for ob in obstacles]
    return _obstacle_term(state.x, state.y, state.theta, obs, w_obs, epsilon, footprint_radius)


def deviation_cost(state: VehicleState, ref: VehicleState, w_dev, d_max) -> float:
    """Quadratic penalty outside the d_max tube around the reference point."""
    over = math.hypot(state.x - ref.x, state.y - ref.y) - d_max
    return w_dev * over * over if over > 0.0 else 0.0


def trajectory_cost(predicted: Trajectory, reference: Trajectory, obstacles, cfg: MpcConfig,
                    footprint_radius=0.0) -> float:
    """Horizon cost, summed over steps 1..N with reference.states[i] matched
    index-by-index. Dynamic obstacles are extrapolated to each step's time."""
    n = len(predicted.states) - 1
    if len(reference.states) < n + 1:
        raise ReferenceExhaustedError(
            f"reference supplies {len(reference.states)} states, need {n + 1}"
        )
    obs = [(ob.center[0], ob.center[1], ob.radius, ob.velocity[0], ob.velocity[1]) for ob in obstacles]
    total = 0.0
    for i in range(1, n + 1):
        s = predicted.states[i]
        r = reference.states[i]
        ex = s.x - r.x
        ey = s.y - r.y
        total += ex * ex + ey * ey
        if obs:
            t = i * predicted.dt
            obs_i = [(ox + vx * t, oy + vy * t, orad) for ox, oy, orad, vx, vy in obs]
            total += _obstacle_term(s.x, s.y, s.theta, obs_i, cfg.w_obs, cfg.epsilon, footprint_radius)
        dev = math.hypot(ex, ey) - cfg.d_max
        if dev > 0.0:
            total += cfg.w_dev * dev * dev
    return total


def select_best_control(state: VehicleState, reference: Trajectory, grid, obstacles,
                        cfg: MpcConfig, params: VehicleParams) -> MpcDecision:
    """Exhaustive evaluation of the control grid; returns the feasible argmin.

    When every rollout collides the decision is infeasible and carries a
    full-brake, straight control.
    """
    a_vals, d_vals = control_grid(cfg)
    rollouts = []
    controls = []
    for a in a_vals:
        for d in d_vals:
            u = ControlInput(float(a), float(d))
            controls.append(u)
            rollouts.append(predict_trajectory(state, u, cfg.horizon, cfg.dt, params))
    xs = np.array([[s.x for s in tr.states] for tr in rollouts])
    ys = np.array([[s.y for s in tr.states] for tr in rollouts])
    feasible = free_rollout_mask(grid, xs, ys, obstacles, params.footprint_radius, cfg.dt)

    best_key = None
    best_idx = -1
    best_cost = math.inf
    for k, (u, tr) in enumerate(zip(controls, rollouts)):
        if not feasible[k]:
            continue
        c = trajectory_cost(tr, reference, obstacles, cfg, params.footprint_radius)
        key = (c, abs(u.delta), abs(u.a), k)
        if best_key is None or key < best_key:
            best_key = key
            best_idx = k
            best_cost = c
    if best_idx < 0:
        u = ControlInput(-1.0, 0.0)
        braking = predict_trajectory(state, u, cfg.horizon, cfg.dt, params)
        return MpcDecision(control=u, predicted=braking, cost=math.inf, feasible=False)
    return MpcDecision(
        control=controls[best_idx],
        predicted=rollouts[best_idx],
        cost=best_cost,
        feasible=True,
    )


class ArcPath:
    """Arc-length indexed view over a polyline (the planned global path)."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if pts.shape[0] < 1:
            raise ValueError("path must contain at least one point")
        self.pts = pts
        if pts.shape[0] > 1:
            deltas = np.diff(pts, axis=0)
            seglen = np.hypot(deltas[:, 0], deltas[:, 1])
        else:
            deltas = np.zeros((0, 2))
            seglen = np.zeros(0)
        self._deltas = deltas
        self._seglen = seglen
        self.cum = np.concatenate([[0.0], np.cumsum(seglen)])
        self.total = float(self.cum[-1])

    def project(self, x, y) -> float:
        """Arc length of the closest polyline point (first segment wins ties)."""
        if self._seglen.size == 0:
            return 0.0
        px = self.pts[:-1, 0]
        py = self.pts[:-1, 1]
        dx = self._deltas[:, 0]
        dy = self._deltas[:, 1]
        len2 = np.where(self._seglen > 0, self._seglen**2, 1.0)
        t = np.clip(((x - px) * dx + (y - py) * dy) / len2, 0.0, 1.0)
        qx = px + t * dx
        qy = py + t * dy
        d2 = (x - qx) ** 2 + (y - qy) ** 2
        i = int(np.argmin(d2))
        return float(self.cum[i] + t[i] * self._seglen[i])

    def _locate(self, s: float) -> tuple[int, float]:
        s = min(max(s, 0.0), self.total)
        if self._seglen.size == 0:
            return 0, 0.0
        i = int(np.searchsorted(self.cum, s, side="right") - 1)
        i = min(max(i, 0), len(self._seglen) - 1)
        rem = s - self.cum[i]
        t = rem / self._seglen[i] if self._seglen[i] > 0 else 0.0
        return i, float(min(t, 1.0))

    def point_at(self, s: float) -> tuple[float, float]:
        if self._seglen.size == 0:
            return (float(self.pts[0, 0]), float(self.pts[0, 1]))
        i, t = self._locate(s)
        return (
            float(self.pts[i, 0] + t * self._deltas[i, 0]),
            float(self.pts[i, 1] + t * self._deltas[i, 1]),
        )

    def heading_at(self, s: float) -> float:
        if self._seglen.size == 0:
            return 0.0
        i, _ = self._locate(s)
        return math.atan2(self._deltas[i, 1], self._deltas[i, 0])


def build_reference(arc: ArcPath, state: VehicleState, n_steps: int, dt: float,
                    cruise_speed: float) -> Trajectory:
    """Reference window for one control step.

    Step i sits at the arc position nearest to the vehicle advanced by
    i * cruise_speed * dt, clamped at the path end. Headings follow the
    containing segment; speeds are the cruise speed.
    """
    s0 = arc.project(state.x, state.y)
    states = []
    for i in range(n_steps + 1):
        s = s0 + i * cruise_speed * dt
        x, y = arc.point_at(s)
        states.append(VehicleState(x, y, arc.heading_at(s), cruise_speed))
    return Trajectory(tuple(states), dt)
