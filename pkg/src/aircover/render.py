"""Deterministic SVG snapshots: formation, links, heat contours, flown paths.

Frames are plain hand-assembled SVG text with fixed float formatting, so a
given (trajectory, scenario, time) triple always produces identical bytes.
Contours come from a small marching-squares pass emitted as a segment soup,
which renders identically to joined isolines.
"""

from __future__ import annotations

import numpy as np

from . import geometry
from .errors import TrajectoryRangeError
from .formation import LayeredGraph

GRID_N = 160
CONTOUR_FRACTIONS = (0.1, 0.25, 0.5, 0.75, 0.9)
PATH_POINT_STRIDE_S = 0.25  # decimate flown paths to one point per this many seconds

_F = "%.4f"


def _fmt(v: float) -> str:
    return _F % v


def _contour_segments(xs, ys, grid, level):
    """Marching squares: line segments of the ``grid == level`` isoline."""
    segs = []
    nx, ny = grid.shape

    def interp(pa, pb, va, vb):
        t = (level - va) / (vb - va)
        return (pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1]))

    for i in range(nx - 1):
        for j in range(ny - 1):
            v00, v10 = grid[i, j], grid[i + 1, j]
            v11, v01 = grid[i + 1, j + 1], grid[i, j + 1]
            idx = (v00 > level) | ((v10 > level) << 1) | ((v11 > level) << 2) | ((v01 > level) << 3)
            if idx in (0, 15):
                continue
            p00 = (xs[i], ys[j])
            p10 = (xs[i + 1], ys[j])
            p11 = (xs[i + 1], ys[j + 1])
            p01 = (xs[i], ys[j + 1])
            edges = {}
            if (idx & 1) != ((idx >> 1) & 1):
                edges["b"] = interp(p00, p10, v00, v10)
            if ((idx >> 1) & 1) != ((idx >> 2) & 1):
                edges["r"] = interp(p10, p11, v10, v11)
            if ((idx >> 3) & 1) != ((idx >> 2) & 1):
                edges["t"] = interp(p01, p11, v01, v11)
            if (idx & 1) != ((idx >> 3) & 1):
                edges["l"] = interp(p00, p01, v00, v01)
            keys = sorted(edges)
            if len(keys) == 2:
                segs.append((edges[keys[0]], edges[keys[1]]))
            elif len(keys) == 4:  # saddle: split consistently by edge name
                segs.append((edges["b"], edges["l"]))
                segs.append((edges["t"], edges["r"]))
    return segs


def _frame_index(times: np.ndarray, t: float) -> int:
    if t < times[0] - 1e-9 or t > times[-1] + 1e-9:
        raise TrajectoryRangeError(
            f"requested time {t} s lies outside the log [{times[0]}, {times[-1]}] s"
        )
    return int(np.argmin(np.abs(times - t)))


def render_frame(
    times: np.ndarray,
    agent_ids,
    positions: np.ndarray,
    scenario,
    graph: LayeredGraph,
    t: float,
) -> str:
    """Build one SVG snapshot of the team at logged time nearest ``t``."""
    k = _frame_index(times, t)
    index = {a: i for i, a in enumerate(agent_ids)}
    cur = positions[k, :, 0:2]

    pts = [cur]
    pts.append(np.array([scenario.boundary_targets[i] for i in sorted(scenario.boundary_targets)]))
    pts.append(scenario.config.positions)
    for zone in scenario.zones:
        pts.append(zone)
    allp = np.vstack(pts)
    lo = allp.min(axis=0)
    hi = allp.max(axis=0)
    pad = 0.08 * max(hi[0] - lo[0], hi[1] - lo[1], 1.0)
    lo -= pad
    hi += pad
    width, height = hi - lo
    scale = 900.0 / max(width, height)

    def sx(x):
        return (x - lo[0]) * scale

    def sy(y):
        return (hi[1] - y) * scale  # flip: SVG y grows downward

    out = []
    out.append(
        '<svg xmlns="http://www.w3.org/2000/svg" width="%s" height="%s" '
        'viewBox="0 0 %s %s">' % (_fmt(width * scale), _fmt(height * scale), _fmt(width * scale), _fmt(height * scale))
    )
    out.append('<rect width="100%" height="100%" fill="white"/>')

    # heat-map contours
    xs = np.linspace(lo[0], hi[0], GRID_N)
    ys = np.linspace(lo[1], hi[1], GRID_N)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    grid = scenario.heat.density(np.stack([gx, gy], axis=-1))
    gmax = float(grid.max())
    if gmax > 0.0:
        for frac in CONTOUR_FRACTIONS:
            parts = []
            for (x1, y1), (x2, y2) in _contour_segments(xs, ys, grid, frac * gmax):
                parts.append(
                    "M%s %sL%s %s" % (_fmt(sx(x1)), _fmt(sy(y1)), _fmt(sx(x2)), _fmt(sy(y2)))
                )
            if parts:
                out.append(
                    '<path d="%s" stroke="#e07830" stroke-width="1" fill="none" opacity="%s"/>'
                    % ("".join(parts), _fmt(0.35 + 0.5 * frac))
                )

    # render-only zone outlines
    for zone in scenario.zones:
        d = "M" + "L".join("%s %s" % (_fmt(sx(x)), _fmt(sy(y))) for x, y in zone) + "Z"
        out.append(f'<path d="{d}" stroke="#2a8f2a" stroke-dasharray="6 4" stroke-width="1.5" fill="none"/>')

    # flown paths up to the frame time (dashed)
    dt = times[1] - times[0] if len(times) > 1 else 1.0
    stride = max(1, int(round(PATH_POINT_STRIDE_S / dt)))
    ticks = list(range(0, k + 1, stride))
    if ticks and ticks[-1] != k:
        ticks.append(k)
    if len(ticks) >= 2:
        for i in range(positions.shape[1]):
            d = "M" + "L".join(
                "%s %s" % (_fmt(sx(positions[kk, i, 0])), _fmt(sy(positions[kk, i, 1])))
                for kk in ticks
            )
            out.append(
                f'<path d="{d}" stroke="#cc3333" stroke-width="0.8" '
                'stroke-dasharray="3 3" fill="none" opacity="0.55"/>'
            )

    # communication links at the current configuration
    for i in sorted(graph.follower_ids):
        xi, yi = cur[index[i]]
        for j in graph.in_neighbors[i]:
            xj, yj = cur[index[j]]
            out.append(
                '<line x1="%s" y1="%s" x2="%s" y2="%s" stroke="#9a9ab0" stroke-width="0.6" opacity="0.7"/>'
                % (_fmt(sx(xi)), _fmt(sy(yi)), _fmt(sx(xj)), _fmt(sy(yj)))
            )

    # boundary polygon through the current leader positions
    hull_order = geometry.convex_hull_indices(
        np.array([cur[index[i]] for i in graph.boundary_ids])
    )
    ring = [graph.boundary_ids[h] for h in hull_order]
    d = "M" + "L".join("%s %s" % (_fmt(sx(cur[index[i]][0])), _fmt(sy(cur[index[i]][1]))) for i in ring) + "Z"
    out.append(f'<path d="{d}" stroke="#444466" stroke-width="1.2" fill="none"/>')

    # agents
    for i in sorted(index):
        x, y = cur[index[i]]
        if i == graph.core_id:
            fill = "#e0a020"
        elif i in graph.boundary_ids:
            fill = "#c03030"
        else:
            fill = "#3060c0"
        out.append(
            '<circle cx="%s" cy="%s" r="4" fill="%s" stroke="black" stroke-width="0.5"/>'
            % (_fmt(sx(x)), _fmt(sy(y)), fill)
        )

    out.append(
        '<text x="12" y="24" font-family="monospace" font-size="16">t = %s s</text>'
        % _fmt(times[k])
    )
    out.append("</svg>")
    return "\n".join(out) + "\n"
