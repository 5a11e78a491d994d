"""Histogram mutual information between the two controllers' predicted state
sequences, and the per-dimension weighted state fusion built on it.

Per dimension d in {x, y, theta, v} the two predicted sequences are binned
over shared equal-width edges (pooled min/max of both), giving marginal and
joint entropies in bits. The normalized score

    nmi = I(X; Y) / sqrt(H(X) H(Y))

drives the combination: above the threshold the fused sequence is
w1 * pursuit + w2 * mpc with w2 = nmi / (nmi + 1); at or below it the fused
sequence falls back to the MPC sequence bit-for-bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import Trajectory, VehicleState, normalize_angle

DIMENSIONS = ("x", "y", "theta", "v")


@dataclass(frozen=True)
class FusionConfig:
    bins: int = 10
    threshold: float = 0.85

    def __post_init__(self):
        if self.bins < 2:
            raise ValueError("bins must be >= 2")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")


@dataclass(frozen=True)
class DimMi:
    """Per-dimension agreement record. Weights are None on the fallback branch."""

    h_p: float
    h_m: float
    mi: float
    nmi: float
    gated: bool
    w_pursuit: float | None = None
    w_mpc: float | None = None


@dataclass(frozen=True)
class MiReport:
    x: DimMi
    y: DimMi
    theta: DimMi
    v: DimMi

    def items(self):
        return tuple((name, getattr(self, name)) for name in DIMENSIONS)

    def __post_init__(self):
        for name, dim in self.items():
            if not (-1e-9 <= dim.mi <= min(dim.h_p, dim.h_m) + 1e-9):
                raise ValueError(f"{name}: mi outside [0, min(H_p, H_m)]")
            if not (-1e-9 <= dim.nmi <= 1.0 + 1e-9):
                raise ValueError(f"{name}: nmi outside [0, 1]")


def _bin_indices(values: np.ndarray, lo: float, hi: float, bins: int) -> np.ndarray:
    # same convention as np.histogram: half-open bins, last bin closed at hi
    edges = np.linspace(lo, hi, bins + 1)
    idx = np.searchsorted(edges, values, side="right") - 1
    return np.clip(idx, 0, bins - 1)


def _entropy_from_counts(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def entropy(values, bins: int, value_range: tuple[float, float]) -> float:
    """Shannon entropy in bits of the equal-width histogram over value_range.

    A degenerate range (min == max) carries no information and scores 0.
    """
    lo, hi = float(value_range[0]), float(value_range[1])
    if lo > hi:
        raise ValueError("range min must not exceed max")
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("values must be non-empty")
    if lo == hi:
        return 0.0
    counts = np.bincount(_bin_indices(values, lo, hi, bins), minlength=bins)
    return _entropy_from_counts(counts)


def _mi_parts(xs: np.ndarray, ys: np.ndarray, bins: int):
    lo = float(min(xs.min(), ys.min()))
    hi = float(max(xs.max(), ys.max()))
    if lo == hi:
        return 0.0, 0.0, 0.0, lo, hi
    bx = _bin_indices(xs, lo, hi, bins)
    by = _bin_indices(ys, lo, hi, bins)
    joint = np.bincount(bx * bins + by, minlength=bins * bins).reshape(bins, bins)
    h_x = _entropy_from_counts(joint.sum(axis=1))
    h_y = _entropy_from_counts(joint.sum(axis=0))
    h_xy = _entropy_from_counts(joint.reshape(-1))
    mi = max(0.0, h_x + h_y - h_xy)
    return mi, h_x, h_y, lo, hi


def _as_pair(xs, ys) -> tuple[np.ndarray, np.ndarray]:
    xs = np.asarray(xs, dtype=float).reshape(-1)
    ys = np.asarray(ys, dtype=float).reshape(-1)
    if xs.size != ys.size:
        raise ValueError(f"sequence lengths differ: {xs.size} vs {ys.size}")
    if xs.size == 0:
        raise ValueError("sequences must be non-empty")
    return xs, ys


def mutual_information(xs, ys, bins: int) -> tuple[float, float, float]:
    """I(X; Y) = H(X) + H(Y) - H(X, Y) in bits, plus the two marginal entropies.

    Both sequences are binned over one shared range (pooled min/max), so the
    estimate is symmetric and bounded by min(H(X), H(Y)).
    """
    xs, ys = _as_pair(xs, ys)
    mi, h_x, h_y, _, _ = _mi_parts(xs, ys, bins)
    return mi, h_x, h_y


def normalized_mi(xs, ys, bins: int) -> float:
    """I / sqrt(H(X) H(Y)), clamped into [0, 1].

    Degenerate marginals: if both sequences collapse to a single bin they
    score 1 when the binned sequences agree element-wise and 0 otherwise;
    a single zero-entropy side always scores 0.
    """
    xs, ys = _as_pair(xs, ys)
    mi, h_x, h_y, lo, hi = _mi_parts(xs, ys, bins)
    if h_x == 0.0 or h_y == 0.0:
        if h_x == 0.0 and h_y == 0.0:
            if lo == hi:
                return 1.0
            same = np.array_equal(
                _bin_indices(xs, lo, hi, bins), _bin_indices(ys, lo, hi, bins)
            )
            return 1.0 if same else 0.0
        return 0.0
    return min(1.0, max(0.0, mi / math.sqrt(h_x * h_y)))


def _dim_sequences(traj: Trajectory, dim: str) -> list[float]:
    return [getattr(s, dim) for s in traj.states]


def fuse_states(pursuit: Trajectory, mpc: Trajectory, cfg: FusionConfig) -> tuple[Trajectory, MiReport]:
    """Combine the two predicted trajectories dimension by dimension.

    Heading is blended circularly (weighted unit vectors, result wrapped into
    (-pi, pi]); its histograms are built on unwrapped values relative to the
    first pursuit heading. The first fused state is re-anchored to the shared
    current state rather than blended.
    """
    if len(pursuit.states) != len(mpc.states):
        raise ValueError(
            f"trajectory lengths differ: {len(pursuit.states)} vs {len(mpc.states)}"
        )
    if pursuit.dt != mpc.dt:
        raise ValueError(f"trajectory dt differ: {pursuit.dt} vs {mpc.dt}")
    p0, m0 = pursuit.states[0], mpc.states[0]
    mismatch = max(
        abs(p0.x - m0.x),
        abs(p0.y - m0.y),
        abs(normalize_angle(p0.theta - m0.theta)),
        abs(p0.v - m0.v),
    )
    if mismatch > 1e-9:
        raise ValueError("trajectories must share their first (current) state")

    theta_p = np.unwrap([s.theta for s in pursuit.states])
    theta_m = np.unwrap([s.theta for s in mpc.states])
    anchor = theta_p[0]
    mi_sequences = {
        "x": ([s.x for s in pursuit.states], [s.x for s in mpc.states]),
        "y": ([s.y for s in pursuit.states], [s.y for s in mpc.states]),
        "theta": (theta_p - anchor, theta_m - anchor),
        "v": ([s.v for s in pursuit.states], [s.v for s in mpc.states]),
    }

    combined: dict[str, list[float]] = {}
    report: dict[str, DimMi] = {}
    for dim in DIMENSIONS:
        seq_p = _dim_sequences(pursuit, dim)
        seq_m = _dim_sequences(mpc, dim)
        mi_x, mi_y = mi_sequences[dim]
        mi, h_p, h_m = mutual_information(mi_x, mi_y, cfg.bins)
        nmi = normalized_mi(mi_x, mi_y, cfg.bins)
        if nmi > cfg.threshold:
            w2 = nmi / (nmi + 1.0)
            w1 = 1.0 - w2
            # equal elements pass through untouched: the convex combination is
            # a fixed point there and must stay exact despite rounding
            if dim == "theta":
                fused = [
                    b
                    if a == b
                    else normalize_angle(
                        math.atan2(
                            w1 * math.sin(a) + w2 * math.sin(b),
                            w1 * math.cos(a) + w2 * math.cos(b),
                        )
                    )
                    for a, b in zip(seq_p, seq_m)
                ]
            else:
                fused = [b if a == b else w1 * a + w2 * b for a, b in zip(seq_p, seq_m)]
            report[dim] = DimMi(h_p, h_m, mi, nmi, gated=False, w_pursuit=w1, w_mpc=w2)
        else:
            fused = list(seq_m)
            report[dim] = DimMi(h_p, h_m, mi, nmi, gated=True)
        combined[dim] = fused

    # re-anchor index 0 to the shared current state instead of blending it
    for dim in DIMENSIONS:
        combined[dim][0] = getattr(m0, dim)

    states = tuple(
        VehicleState(combined["x"][k], combined["y"][k], combined["theta"][k], combined["v"][k])
        for k in range(len(mpc.states))
    )
    return Trajectory(states, mpc.dt), MiReport(**report)
