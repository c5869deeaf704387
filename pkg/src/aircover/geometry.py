"""Planar geometry primitives: convex hulls, barycentric coordinates, polygons."""

from __future__ import annotations

import numpy as np

from .errors import DegenerateHullError, DegenerateRegionError

#: Triangles with |signed area| at or below this are treated as degenerate.
AREA_EPS = 1e-12


def cross2(u, v):
    """z-component of the cross product of planar vectors (broadcasts)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


def convex_hull_indices(points) -> np.ndarray:
    """Strict convex hull via Andrew's monotone chain; CCW vertex indices.

    Points interior to the hull, or lying on a hull edge between two
    vertices, are excluded: only actual polygon vertices are returned.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("points must have shape (N, 2)")
    n = pts.shape[0]
    if n < 3:
        raise DegenerateHullError("need at least 3 points for a planar hull")
    order = np.lexsort((pts[:, 1], pts[:, 0]))

    def half(seq):
        chain: list[int] = []
        for idx in seq:
            while len(chain) >= 2:
                o = pts[chain[-2]]
                a = pts[chain[-1]]
                b = pts[idx]
                if (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]) <= 0.0:
                    chain.pop()
                else:
                    break
            chain.append(int(idx))
        return chain

    lower = half(order)
    upper = half(order[::-1])
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise DegenerateHullError("all points are collinear; hull has no area")
    return np.asarray(hull, dtype=np.int64)


def triangle_signed_area(tri) -> np.ndarray:
    """Signed area of triangles shaped (..., 3, 2); positive when CCW."""
    tri = np.asarray(tri, dtype=float)
    return 0.5 * cross2(tri[..., 1, :] - tri[..., 0, :], tri[..., 2, :] - tri[..., 0, :])


def barycentric_batch(p, tris):
    """Barycentric coordinates of one point w.r.t. many triangles.

    Parameters
    ----------
    p : (2,) point
    tris : (T, 3, 2) triangle vertices

    Returns
    -------
    coords : (T, 3) barycentric coordinates (rows sum to 1)
    twice_area : (T,) signed doubled triangle areas (zero marks degenerate rows,
        for which the coordinate rows are NaN)
    """
    p = np.asarray(p, dtype=float)
    tris = np.asarray(tris, dtype=float)
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    d = cross2(b - a, c - a)
    with np.errstate(divide="ignore", invalid="ignore"):
        wa = cross2(b - p, c - p) / d
        wb = cross2(c - p, a - p) / d
    wc = 1.0 - wa - wb
    return np.stack([wa, wb, wc], axis=-1), d


def polygon_signed_area(verts) -> float:
    """Shoelace signed area; positive for CCW vertex order."""
    v = np.asarray(verts, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polygon_centroid(verts) -> np.ndarray:
    """Area centroid of a simple polygon."""
    v = np.asarray(verts, dtype=float)
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    w = x * yn - xn * y
    area = 0.5 * np.sum(w)
    if abs(area) <= AREA_EPS:
        raise DegenerateRegionError("polygon area is numerically zero")
    cx = np.sum((x + xn) * w) / (6.0 * area)
    cy = np.sum((y + yn) * w) / (6.0 * area)
    return np.array([cx, cy])


def require_convex_ccw(verts, what="polygon") -> np.ndarray:
    """Validate a convex CCW polygon with positive area; returns it as float array."""
    v = np.asarray(verts, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
        raise DegenerateRegionError(f"{what} must be a list of >= 3 planar vertices")
    area = polygon_signed_area(v)
    if area <= AREA_EPS:
        raise DegenerateRegionError(
            f"{what} must be counter-clockwise with area > {AREA_EPS:g} (got {area:g})"
        )
    nxt = np.roll(v, -1, axis=0)
    prv = np.roll(v, 1, axis=0)
    turns = cross2(v - prv, nxt - v)
    scale = max(1.0, float(np.max(np.abs(v))))
    if np.any(turns < -1e-9 * scale * scale):
        raise DegenerateRegionError(f"{what} is not convex")
    return v


def orient_ccw(verts) -> np.ndarray:
    """Return the polygon with CCW orientation (reversing if needed)."""
    v = np.asarray(verts, dtype=float)
    return v if polygon_signed_area(v) >= 0.0 else v[::-1].copy()


def min_pairwise_distance(points) -> float:
    """Smallest pairwise Euclidean distance; inf for fewer than 2 points."""
    pts = np.asarray(points, dtype=float)
    n = pts.shape[0]
    if n < 2:
        return float("inf")
    diff = pts[:, None, :] - pts[None, :, :]
    d2 = np.sum(diff * diff, axis=-1)
    d2[np.arange(n), np.arange(n)] = np.inf
    return float(np.sqrt(d2.min()))
