"""Sampling-based global planner.

Skeleton: an RRT* grow loop (nearest, steer, choose-parent within the rewire
radius, rewire) with two additions: once a first solution exists, samples are
drawn uniformly from the prolate ellipse whose foci are start/goal and whose
major axis is the best cost found so far; and any-angle line-of-sight
shortcuts (connect a new node straight to its parent's parent when visible,
plus a final greedy smoothing pass over the extracted path).

Only the static world is considered: dynamic obstacles are the local layer's
problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import gridmap


class InvalidEndpointError(ValueError):
    """Start or goal lies in occupied space."""


class PlanningFailedError(RuntimeError):
    """No collision-free path was found within the iteration budget."""


@dataclass(frozen=True)
class PlannerConfig:
    max_iterations: int = 2000
    step_size: float = 1.0
    goal_tolerance: float = 1.0
    rewire_radius: float = 5.0
    goal_bias: float = 0.05
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.goal_tolerance <= 0:
            raise ValueError("goal_tolerance must be positive")
        if self.rewire_radius <= 0:
            raise ValueError("rewire_radius must be positive")
        if not 0.0 <= self.goal_bias <= 1.0:
            raise ValueError("goal_bias must lie in [0, 1]")


@dataclass(frozen=True)
class PlanResult:
    path: tuple[tuple[float, float], ...]
    cost: float
    iterations_used: int
    cost_history: tuple[tuple[int, float], ...]


def path_length(points) -> float:
    total = 0.0
    for (x1, y1), (x2, y2) in zip(points, points[1:]):
        total += math.hypot(x2 - x1, y2 - y1)
    return total


def informed_sample(start, goal, c_best, extent, rng) -> tuple[float, float]:
    """Draw one sample: uniform over the extent until a solution exists,
    then uniform over the informed ellipse of focal sum c_best.

    extent is (xmin, ymin, xmax, ymax). Every point returned with finite
    c_best satisfies |p - start| + |p - goal| <= c_best (up to rounding).
    """
    xmin, ymin, xmax, ymax = extent
    if math.isinf(c_best):
        return (rng.uniform(xmin, xmax), rng.uniform(ymin, ymax))
    c_min = math.hypot(goal[0] - start[0], goal[1] - start[1])
    if c_best < c_min:
        raise ValueError(f"c_best {c_best} is below the focal distance {c_min}")
    a = c_best / 2.0
    b = math.sqrt(max(c_best * c_best - c_min * c_min, 0.0)) / 2.0
    # uniform point in the unit disc, stretched to the ellipse axes,
    # rotated onto the start-goal axis, translated to the midpoint
    r = math.sqrt(rng.random())
    phi = rng.random() * 2.0 * math.pi
    ex = a * r * math.cos(phi)
    ey = b * r * math.sin(phi)
    if c_min > 0.0:
        ct = (goal[0] - start[0]) / c_min
        st = (goal[1] - start[1]) / c_min
    else:
        ct, st = 1.0, 0.0
    cx = (start[0] + goal[0]) / 2.0
    cy = (start[1] + goal[1]) / 2.0
    return (cx + ct * ex - st * ey, cy + st * ex + ct * ey)


def shortcut_path(path, grid, obstacles=(), radius=0.0) -> list[tuple[float, float]]:
    """Greedy any-angle smoothing: from each anchor jump to the farthest
    waypoint with collision-free line of sight. Endpoints are preserved and
    the pass is idempotent."""
    pts = [(float(p[0]), float(p[1])) for p in path]
    if len(pts) <= 2:
        return pts
    out = [pts[0]]
    i = 0
    last = len(pts) - 1
    while i < last:
        k = last
        while k > i + 1 and not gridmap.is_free_segment(grid, pts[i], pts[k], obstacles, radius):
            k -= 1
        out.append(pts[k])
        i = k
    return out


def plan(grid, start, goal, cfg: PlannerConfig, obstacles=(), radius=0.0) -> PlanResult:
    """Plan a collision-free path start -> goal on the grid.

    Deterministic for a fixed cfg.rng_seed. Dynamic obstacles in `obstacles`
    are ignored; `radius` is the footprint used for all collision queries.
    """
    static_obs = tuple(ob for ob in obstacles if ob.is_static)
    start = (float(start[0]), float(start[1]))
    goal = (float(goal[0]), float(goal[1]))
    if not gridmap.is_free_point(grid, start, static_obs, radius):
        raise InvalidEndpointError(f"start {start} is not in free space")
    if not gridmap.is_free_point(grid, goal, static_obs, radius):
        raise InvalidEndpointError(f"goal {goal} is not in free space")
    if start == goal:
        return PlanResult(path=(start,), cost=0.0, iterations_used=0, cost_history=())

    rng = np.random.default_rng(cfg.rng_seed)
    c_min = math.hypot(goal[0] - start[0], goal[1] - start[1])
    cap = cfg.max_iterations + 1
    xs = np.empty(cap)
    ys = np.empty(cap)
    cost = np.empty(cap)
    edge = np.empty(cap)
    parent = np.full(cap, -1, dtype=np.int64)
    children: list[list[int]] = [[] for _ in range(cap)]
    xs[0], ys[0] = start
    cost[0] = 0.0
    edge[0] = 0.0
    n = 1

    goal_parent = -1
    goal_edge = math.inf
    best_cost = math.inf
    history: list[tuple[int, float]] = []
    rewire_sq = cfg.rewire_radius * cfg.rewire_radius

    def seg_free(p, q):
        return gridmap.is_free_segment(grid, p, q, static_obs, radius)

    for it in range(1, cfg.max_iterations + 1):
        if rng.random() < cfg.goal_bias:
            sx, sy = goal
        else:
            # rounding can leave a near-straight tree cost a few ulps under
            # the focal distance; clamp so the ellipse stays well defined
            c_best = best_cost if best_cost > c_min else c_min
            sx, sy = informed_sample(start, goal, c_best, grid.extent, rng)

        d2 = (xs[:n] - sx) ** 2 + (ys[:n] - sy) ** 2
        ni = int(np.argmin(d2))
        dist = math.sqrt(d2[ni])
        if dist == 0.0:
            continue
        step = min(cfg.step_size, dist)
        nx = xs[ni] + (sx - xs[ni]) * (step / dist)
        ny = ys[ni] + (sy - ys[ni]) * (step / dist)
        if not seg_free((xs[ni], ys[ni]), (nx, ny)):
            continue

        d2n = (xs[:n] - nx) ** 2 + (ys[:n] - ny) ** 2
        near = np.nonzero(d2n <= rewire_sq)[0]
        dn = np.sqrt(d2n[near])
        best_parent = -1
        best_parent_cost = math.inf
        if near.size:
            order = np.argsort(cost[near] + dn, kind="stable")
            for k in order:
                j = int(near[k])
                if j == ni or seg_free((xs[j], ys[j]), (nx, ny)):
                    best_parent = j
                    best_parent_cost = float(cost[j] + dn[k])
                    break
        if best_parent == -1:
            best_parent = ni
            best_parent_cost = float(cost[ni] + step)

        # any-angle shortcut: adopt the grandparent when it is visible
        gp = int(parent[best_parent])
        if gp >= 0:
            dgp = math.hypot(nx - xs[gp], ny - ys[gp])
            if cost[gp] + dgp <= best_parent_cost and seg_free((xs[gp], ys[gp]), (nx, ny)):
                best_parent = gp
                best_parent_cost = float(cost[gp] + dgp)

        idx = n
        xs[idx] = nx
        ys[idx] = ny
        cost[idx] = best_parent_cost
        edge[idx] = math.hypot(nx - xs[best_parent], ny - ys[best_parent])
        parent[idx] = best_parent
        children[best_parent].append(idx)
        n += 1

        # rewire the neighborhood through the new node
        for k in range(near.size):
            j = int(near[k])
            if j == best_parent or j == 0:
                continue
            nc = best_parent_cost + dn[k]
            if nc < cost[j] and seg_free((xs[j], ys[j]), (nx, ny)):
                children[int(parent[j])].remove(j)
                parent[j] = idx
                children[idx].append(j)
                edge[j] = float(dn[k])
                cost[j] = nc
                stack = [j]
                while stack:
                    u = stack.pop()
                    for c in children[u]:
                        cost[c] = cost[u] + edge[c]
                        stack.append(c)

        # try the new node as the goal's parent
        dg = math.hypot(nx - goal[0], ny - goal[1])
        current = cost[goal_parent] + goal_edge if goal_parent >= 0 else math.inf
        if dg <= cfg.step_size and cost[idx] + dg < current and seg_free((nx, ny), goal):
            goal_parent = idx
            goal_edge = dg

        if goal_parent >= 0:
            total = float(cost[goal_parent] + goal_edge)
            best_cost = total
            if not history or total < history[-1][1]:
                history.append((it, total))

    if goal_parent < 0:
        raise PlanningFailedError(
            f"no path from {start} to {goal} within {cfg.max_iterations} iterations"
        )

    rev = [goal]
    j = goal_parent
    while j >= 0:
        rev.append((float(xs[j]), float(ys[j])))
        j = int(parent[j])
    raw = rev[::-1]
    smooth = shortcut_path(raw, grid, static_obs, radius)
    final_cost = path_length(smooth)
    if history and final_cost < history[-1][1]:
        history.append((cfg.max_iterations, final_cost))
    return PlanResult(
        path=tuple(smooth),
        cost=final_cost,
        iterations_used=cfg.max_iterations,
        cost_history=tuple(history),
    )


def format_plan_result(result: PlanResult) -> str:
    """Path export: one `x,y` pair per line plus a trailing summary line."""
    lines = [f"{x!r},{y!r}" for x, y in result.path]
    lines.append(f"cost={result.cost!r} iterations={result.iterations_used}")
    return "\n".join(lines) + "\n"
