"""Minimal standalone SVG writers for trajectory overlays and time series.

No display stack: files are plain SVG text. The data CSVs stay authoritative;
these are the paper-figure-style visual companions.
"""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _polyline(points, color, width=1.5, dasharray=None):
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in points)
    dash = f' stroke-dasharray="{dasharray}"' if dasharray else ""
    return (
        f'<polyline fill="none" stroke="{color}" stroke-width="{width}"{dash} points="{pts}"/>'
    )


def trajectory_overlay_svg(grid, runs, obstacles=(), plan_path=None, size=640) -> str:
    """Map view: occupied cells, obstacle discs, the global plan, one polyline per run.

    runs: mapping label -> iterable of (x, y) world points.
    """
    xmin, ymin, xmax, ymax = grid.extent
    scale = size / max(xmax - xmin, ymax - ymin)

    def to_px(x, y):
        return ((x - xmin) * scale, (ymax - y) * scale)  # y grows upward in world

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size + 30 + 18 * len(runs)}" '
        f'viewBox="0 0 {size} {size + 30 + 18 * len(runs)}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="#fafafa" stroke="#333"/>',
    ]
    res = grid.resolution
    occ = grid.occ
    for j in range(grid.height):
        for i in range(grid.width):
            if occ[j, i]:
                px, py = to_px(xmin + i * res, ymin + (j + 1) * res)
                parts.append(
                    f'<rect x="{px:.2f}" y="{py:.2f}" width="{res * scale:.2f}" '
                    f'height="{res * scale:.2f}" fill="#555"/>'
                )
    for ob in obstacles:
        cx, cy = to_px(*ob.center)
        color = "#2ca02c" if not ob.is_static else "#777"
        parts.append(
            f'<circle cx="{cx:.2f}" cy="{cy:.2f}" r="{ob.radius * scale:.2f}" '
            f'fill="{color}" fill-opacity="0.5" stroke="{color}"/>'
        )
    if plan_path is not None and len(plan_path) > 1:
        parts.append(_polyline([to_px(*p) for p in plan_path], "#999", 1.0, dasharray="6,4"))
    for k, (label, pts) in enumerate(runs.items()):
        color = PALETTE[k % len(PALETTE)]
        px = [to_px(x, y) for x, y in pts]
        if len(px) > 1:
            parts.append(_polyline(px, color, 2.0))
        ly = size + 20 + 18 * k
        parts.append(f'<line x1="10" y1="{ly - 4}" x2="40" y2="{ly - 4}" stroke="{color}" stroke-width="3"/>')
        parts.append(f'<text x="48" y="{ly}" font-size="13" font-family="sans-serif">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def timeseries_svg(series, title, ylabel, width=720, height=280) -> str:
    """Line chart: series is a mapping label -> (times, values)."""
    pad_l, pad_r, pad_t, pad_b = 50, 10, 28, 34
    legend_h = 18 * len(series)
    all_t = [t for ts, _ in series.values() for t in ts]
    all_v = [v for _, vs in series.values() for v in vs]
    if not all_t:
        all_t, all_v = [0.0, 1.0], [0.0, 1.0]
    t0, t1 = min(all_t), max(all_t)
    v0, v1 = min(all_v), max(all_v)
    if t1 == t0:
        t1 = t0 + 1.0
    if v1 == v0:
        v0, v1 = v0 - 1.0, v1 + 1.0
    span_x = width - pad_l - pad_r
    span_y = height - pad_t - pad_b

    def to_px(t, v):
        return (pad_l + (t - t0) / (t1 - t0) * span_x, pad_t + (v1 - v) / (v1 - v0) * span_y)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height + legend_h}" '
        f'viewBox="0 0 {width} {height + legend_h}">',
        f'<text x="{width / 2:.0f}" y="18" text-anchor="middle" font-size="14" '
        f'font-family="sans-serif">{escape(title)}</text>',
        f'<line x1="{pad_l}" y1="{pad_t}" x2="{pad_l}" y2="{height - pad_b}" stroke="#333"/>',
        f'<line x1="{pad_l}" y1="{height - pad_b}" x2="{width - pad_r}" y2="{height - pad_b}" stroke="#333"/>',
        f'<text x="12" y="{height / 2:.0f}" font-size="12" font-family="sans-serif" '
        f'transform="rotate(-90 12 {height / 2:.0f})" text-anchor="middle">{escape(ylabel)}</text>',
        f'<text x="{width / 2:.0f}" y="{height - 8}" text-anchor="middle" font-size="12" '
        f'font-family="sans-serif">t [s]</text>',
    ]
    for frac in (0.0, 0.5, 1.0):
        v = v0 + frac * (v1 - v0)
        _, py = to_px(t0, v)
        parts.append(
            f'<text x="{pad_l - 6}" y="{py + 4:.1f}" text-anchor="end" font-size="11" '
            f'font-family="sans-serif">{v:.2g}</text>'
        )
        t = t0 + frac * (t1 - t0)
        px, _ = to_px(t, v0)
        parts.append(
            f'<text x="{px:.1f}" y="{height - pad_b + 16}" text-anchor="middle" font-size="11" '
            f'font-family="sans-serif">{t:.3g}</text>'
        )
    for k, (label, (ts, vs)) in enumerate(series.items()):
        color = PALETTE[k % len(PALETTE)]
        pts = [to_px(t, v) for t, v in zip(ts, vs)]
        if len(pts) > 1:
            parts.append(_polyline(pts, color, 1.5))
        ly = height + 14 + 18 * k
        parts.append(f'<line x1="{pad_l}" y1="{ly - 4}" x2="{pad_l + 30}" y2="{ly - 4}" stroke="{color}" stroke-width="3"/>')
        parts.append(f'<text x="{pad_l + 38}" y="{ly}" font-size="13" font-family="sans-serif">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
