"""Vehicle kinematics and the state/control/trajectory types shared by every layer.

The motion model is a rear-axle kinematic bicycle stepped with explicit Euler:

    x' = x + v cos(theta) dt
    y' = y + v sin(theta) dt
    theta' = wrap(theta + (v / wheelbase) tan(delta) dt)
    v' = clamp(v + a dt, 0, v_max)

Headings always live in (-pi, pi]; speed never goes negative (no reverse).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi
ACCEL_MIN = -1.0
ACCEL_MAX = 1.0
STEER_MAX = math.pi / 4.0


def normalize_angle(theta: float) -> float:
    """Wrap an angle into (-pi, pi]."""
    r = math.fmod(theta, TWO_PI)
    if r > math.pi:
        r -= TWO_PI
    elif r <= -math.pi:
        r += TWO_PI
    return r


@dataclass(frozen=True, slots=True)
class VehicleParams:
    """Geometry and limits of the simulated vehicle."""

    wheelbase: float = 2.5
    v_max: float = 10.0
    footprint_radius: float = 1.0

    def __post_init__(self):
        if self.wheelbase <= 0 or self.v_max <= 0 or self.footprint_radius <= 0:
            raise ValueError("vehicle parameters must be strictly positive")


@dataclass(frozen=True, slots=True)
class VehicleState:
    """Planar pose plus forward speed. theta is wrapped at construction."""

    x: float
    y: float
    theta: float
    v: float

    def __post_init__(self):
        object.__setattr__(self, "theta", normalize_angle(self.theta))
        if self.v < 0.0:
            raise ValueError(f"speed must be non-negative, got {self.v}")

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True, slots=True)
class ControlInput:
    """Acceleration / steering pair, clamped into [-1, 1] x [-pi/4, pi/4]."""

    a: float
    delta: float

    def __post_init__(self):
        object.__setattr__(self, "a", min(max(self.a, ACCEL_MIN), ACCEL_MAX))
        object.__setattr__(self, "delta", min(max(self.delta, -STEER_MAX), STEER_MAX))


@dataclass(frozen=True, slots=True)
class Trajectory:
    """Ordered state sequence sampled every dt seconds."""

    states: tuple[VehicleState, ...]
    dt: float

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(self.states))
        if not self.states:
            raise ValueError("trajectory must contain at least one state")
        if self.dt <= 0:
            raise ValueError("trajectory dt must be positive")

    def __len__(self) -> int:
        return len(self.states)

    def length(self) -> float:
        """Polyline length of the traced positions."""
        total = 0.0
        for a, b in zip(self.states, self.states[1:]):
            total += math.hypot(b.x - a.x, b.y - a.y)
        return total


def propagate(state: VehicleState, u: ControlInput, dt: float, params: VehicleParams) -> VehicleState:
    """One bicycle-model step under a held control."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    x = state.x + state.v * math.cos(state.theta) * dt
    y = state.y + state.v * math.sin(state.theta) * dt
    theta = normalize_angle(state.theta + (state.v / params.wheelbase) * math.tan(u.delta) * dt)
    v = state.v + u.a * dt
    if v < 0.0:
        v = 0.0
    elif v > params.v_max:
        v = params.v_max
    return VehicleState(x, y, theta, v)


def predict_trajectory(
    state: VehicleState, u: ControlInput, n_steps: int, dt: float, params: VehicleParams
) -> Trajectory:
    """Roll the model forward n_steps under one held control.

    Returns n_steps + 1 states; states[0] is the input state.
    """
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    states = [state]
    s = state
    for _ in range(n_steps):
        s = propagate(s, u, dt, params)
        states.append(s)
    return Trajectory(tuple(states), dt)
