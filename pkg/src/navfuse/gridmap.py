"""Occupancy grid, disc obstacles, and the collision queries used by every layer.

Conventions:
  - the world outside the grid extent counts as occupied (the map is closed);
  - rejection needs strict overlap: a footprint exactly tangent to a cell or
    an obstacle surface is still free;
  - dynamic obstacles are extrapolated at constant velocity when a trajectory
    is checked against time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Trajectory


class MapFormatError(ValueError):
    """Map file header or cell rows cannot be parsed."""


class GridDimensionError(MapFormatError):
    """Cell rows do not match the declared width/height."""


@dataclass(frozen=True)
class Obstacle:
    """Disc obstacle; velocity (0, 0) marks it static."""

    center: tuple[float, float]
    radius: float
    velocity: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("obstacle radius must be positive")

    @property
    def is_static(self) -> bool:
        return self.velocity[0] == 0.0 and self.velocity[1] == 0.0

    def center_at(self, t: float) -> tuple[float, float]:
        """Constant-velocity extrapolated center after t seconds."""
        if t == 0.0 or self.is_static:
            return self.center
        return (self.center[0] + self.velocity[0] * t, self.center[1] + self.velocity[1] * t)


class OccupancyGrid:
    """Binary occupancy raster with metric resolution.

    Row 0 is the minimum-y row; `origin` is the world position of the
    corner of cell (0, 0). Cells are immutable after construction.
    """

    def __init__(self, width, height, resolution, cells, origin=(0.0, 0.0)):
        width = int(width)
        height = int(height)
        if width <= 0 or height <= 0:
            raise GridDimensionError("grid dimensions must be positive")
        if not resolution > 0:
            raise MapFormatError("resolution must be positive")
        occ = np.asarray(cells, dtype=bool)
        if occ.ndim == 1:
            if occ.size != width * height:
                raise GridDimensionError(
                    f"expected {width * height} cells, got {occ.size}"
                )
            occ = occ.reshape(height, width)
        elif occ.shape != (height, width):
            raise GridDimensionError(
                f"expected shape {(height, width)}, got {occ.shape}"
            )
        occ = np.ascontiguousarray(occ)
        occ.setflags(write=False)
        self.width = width
        self.height = height
        self.resolution = float(resolution)
        self.origin = (float(origin[0]), float(origin[1]))
        self.occ = occ
        self._any_occupied = bool(occ.any())
        self._window_cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    @property
    def cells(self) -> np.ndarray:
        """Row-major flat view of the occupancy."""
        return self.occ.reshape(-1)

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(xmin, ymin, xmax, ymax) in world coordinates."""
        x0, y0 = self.origin
        return (x0, y0, x0 + self.width * self.resolution, y0 + self.height * self.resolution)

    def _window_offsets(self, radius: float) -> tuple[np.ndarray, np.ndarray]:
        """Cell-index offsets that can hold a cell overlapping a disc of `radius`."""
        cached = self._window_cache.get(radius)
        if cached is not None:
            return cached
        res = self.resolution
        m = int(math.ceil(radius / res)) + 1
        dis, djs = [], []
        for dj in range(-m, m + 1):
            for di in range(-m, m + 1):
                gap_x = max(abs(di) - 1, 0) * res
                gap_y = max(abs(dj) - 1, 0) * res
                if gap_x * gap_x + gap_y * gap_y < radius * radius or (di == 0 and dj == 0):
                    dis.append(di)
                    djs.append(dj)
        out = (np.asarray(dis, dtype=np.int64), np.asarray(djs, dtype=np.int64))
        self._window_cache[radius] = out
        return out


def load_grid(source) -> OccupancyGrid:
    """Load a map file (see parse_grid for the format)."""
    return parse_grid(Path(source).read_text())


def parse_grid(text: str) -> OccupancyGrid:
    """Parse the text map format.

    First line: `width height resolution`. Then `height` rows of exactly
    `width` characters, '#' occupied and '.' free, row 0 being the
    minimum-y row. Comment lines (';' prefix) and blank lines before the
    header are skipped. The origin is fixed at (0, 0).
    """
    lines = text.splitlines()
    i = 0
    while i < len(lines) and (not lines[i].strip() or lines[i].lstrip().startswith(";")):
        i += 1
    if i >= len(lines):
        raise MapFormatError("missing header line")
    parts = lines[i].split()
    if len(parts) != 3:
        raise MapFormatError(
            f"line {i + 1}: header must be 'width height resolution', got {lines[i]!r}"
        )
    try:
        width, height = int(parts[0]), int(parts[1])
        resolution = float(parts[2])
    except ValueError as exc:
        raise MapFormatError(f"line {i + 1}: {exc}") from exc
    if width <= 0 or height <= 0:
        raise MapFormatError(f"line {i + 1}: dimensions must be positive")
    if not resolution > 0:
        raise MapFormatError(f"line {i + 1}: resolution must be positive")
    rows = []
    for r in range(height):
        j = i + 1 + r
        if j >= len(lines):
            raise GridDimensionError(f"expected {height} cell rows, found {r}")
        row = lines[j]
        if len(row) != width:
            raise GridDimensionError(
                f"line {j + 1}: expected {width} characters, got {len(row)}"
            )
        bad = set(row) - {"#", "."}
        if bad:
            raise MapFormatError(f"line {j + 1}: invalid cell characters {sorted(bad)!r}")
        rows.append([c == "#" for c in row])
    for j in range(i + 1 + height, len(lines)):
        if lines[j].strip():
            raise GridDimensionError(f"line {j + 1}: unexpected extra row")
    return OccupancyGrid(width, height, resolution, np.array(rows, dtype=bool))


@dataclass(frozen=True)
class Observation:
    """Snapshot handed to the local layer each tick: obstacles at time k plus the static grid."""

    obstacles: tuple[Obstacle, ...]
    grid: OccupancyGrid

    def __post_init__(self):
        object.__setattr__(self, "obstacles", tuple(self.obstacles))
        xmin, ymin, xmax, ymax = self.grid.extent
        for ob in self.obstacles:
            x, y = ob.center
            if not (xmin <= x <= xmax and ymin <= y <= ymax):
                raise ValueError(f"obstacle at {ob.center} lies outside the grid extent")


def free_mask_points(grid, xs, ys, obstacles, radius, time=0.0) -> np.ndarray:
    """Vectorized freeness test for a batch of world points.

    A point is free when the disc of `radius` around it stays inside the
    extent, strictly avoids every obstacle disc (extrapolated to `time`),
    and strictly avoids every occupied cell rectangle.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    xmin, ymin, xmax, ymax = grid.extent
    free = (
        (xs - radius >= xmin)
        & (xs + radius <= xmax)
        & (ys - radius >= ymin)
        & (ys + radius <= ymax)
    )
    for ob in obstacles:
        cx, cy = ob.center_at(time)
        rr = ob.radius + radius
        dx = xs - cx
        dy = ys - cy
        free &= dx * dx + dy * dy >= rr * rr
    if grid._any_occupied and free.any():
        res = grid.resolution
        x0, y0 = grid.origin
        ci = np.floor((xs - x0) / res).astype(np.int64)
        cj = np.floor((ys - y0) / res).astype(np.int64)
        dis, djs = grid._window_offsets(radius)
        r2 = radius * radius
        h, w = grid.height, grid.width
        occ = grid.occ
        for di, dj in zip(dis, djs):
            ii = ci + di
            jj = cj + dj
            valid = (ii >= 0) & (ii < w) & (jj >= 0) & (jj < h)
            if not valid.any():
                continue
            hit = np.zeros(xs.shape, dtype=bool)
            hit[valid] = occ[jj[valid], ii[valid]]
            if not hit.any():
                continue
            if di == 0 and dj == 0:
                # the containing cell blocks regardless of radius
                free &= ~hit
                continue
            lox = x0 + ii * res
            loy = y0 + jj * res
            dx = np.maximum(np.maximum(lox - xs, xs - (lox + res)), 0.0)
            dy = np.maximum(np.maximum(loy - ys, ys - (loy + res)), 0.0)
            free &= ~(hit & (dx * dx + dy * dy < r2))
    return free


def free_rollout_mask(grid, xs, ys, obstacles, radius, dt) -> np.ndarray:
    """Freeness per rollout for stacked trajectories.

    xs, ys have shape (n_rollouts, n_states); state k is checked against
    obstacles extrapolated to k * dt. Exactly equivalent to running
    is_free_trajectory on each row.
    """
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    alive = np.ones(xs.shape[0], dtype=bool)
    for k in range(xs.shape[1]):
        alive &= free_mask_points(grid, xs[:, k], ys[:, k], obstacles, radius, time=k * dt)
        if not alive.any():
            break
    return alive


def is_free_point(grid, p, obstacles, radius) -> bool:
    """True when the footprint disc around p overlaps nothing."""
    mask = free_mask_points(
        grid, np.array([float(p[0])]), np.array([float(p[1])]), obstacles, radius
    )
    return bool(mask[0])


def is_free_segment(grid, p1, p2, obstacles, radius) -> bool:
    """Sampled segment check at spacing <= resolution / 2, endpoints included.

    Endpoints are ordered canonically before sampling so the result is
    exactly symmetric in (p1, p2).
    """
    a = (float(p1[0]), float(p1[1]))
    b = (float(p2[0]), float(p2[1]))
    if b < a:
        a, b = b, a
    dx = b[0] - a[0]
    dy = b[1] - a[1]
    dist = math.hypot(dx, dy)
    if dist == 0.0:
        return is_free_point(grid, a, obstacles, radius)
    n = int(math.ceil(dist / (grid.resolution * 0.5)))
    ts = np.arange(n + 1, dtype=float) / n
    xs = a[0] + ts * dx
    ys = a[1] + ts * dy
    return bool(free_mask_points(grid, xs, ys, obstacles, radius).all())


def is_free_trajectory(grid, traj: Trajectory, obstacles, radius) -> bool:
    """Point-wise freeness over a trajectory with obstacles advanced per step."""
    xs = np.array([[s.x for s in traj.states]])
    ys = np.array([[s.y for s in traj.states]])
    return bool(free_rollout_mask(grid, xs, ys, obstacles, radius, traj.dt)[0])
