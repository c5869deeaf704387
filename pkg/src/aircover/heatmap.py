"""Prioritized Gaussian-mixture service heat map and polygon integration.

Each application contributes a mixture of normalized bivariate Gaussians over
its target points; the full field is the priority-weighted sum of the
per-application mixtures.  Integration over convex polygons uses fan
triangulation with a degree-5 symmetric triangle rule and adaptive dyadic
subdivision, so planner output is deterministic (Monte Carlo appears only as
a test oracle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from . import _kernels, geometry
from .errors import CovarianceError

#: Default relative tolerance for adaptive polygon integration.
QUAD_REL_TOL = 1e-6

#: Recursion cap for adaptive subdivision (each level quarters the triangles).
_MAX_DEPTH = 16

#: Worklist size guard; beyond this the current refinement is accepted as-is.
_MAX_ACTIVE = 400_000

_SYM_TOL = 1e-12
_ALPHA_SUM_TOL = 1e-9


def _degree5_rule():
    """Degree-5 symmetric 7-point triangle rule (barycentric nodes, unit weights)."""
    s15 = math.sqrt(15.0)
    b1 = (6.0 + s15) / 21.0
    a1 = 1.0 - 2.0 * b1
    w1 = (155.0 + s15) / 1200.0
    b2 = (6.0 - s15) / 21.0
    a2 = 1.0 - 2.0 * b2
    w2 = (155.0 - s15) / 1200.0
    nodes = np.array(
        [
            [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            [a1, b1, b1],
            [b1, a1, b1],
            [b1, b1, a1],
            [a2, b2, b2],
            [b2, a2, b2],
            [b2, b2, a2],
        ]
    )
    wts = np.array([9.0 / 40.0, w1, w1, w1, w2, w2, w2])
    return nodes, wts


_RULE_NODES, _RULE_WEIGHTS = _degree5_rule()


@dataclass(frozen=True)
class GaussianTarget:
    """One service target: mean position and SPD covariance."""

    mean: np.ndarray  # (2,)
    cov: np.ndarray  # (2, 2)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        if mean.shape != (2,) or cov.shape != (2, 2):
            raise CovarianceError("target needs a 2-vector mean and 2x2 covariance")
        if abs(cov[0, 1] - cov[1, 0]) > _SYM_TOL * max(1.0, np.abs(cov).max()):
            raise CovarianceError(f"covariance is not symmetric: {cov.tolist()}")
        det = cov[0, 0] * cov[1, 1] - cov[0, 1] * cov[1, 0]
        if cov[0, 0] <= 0.0 or det <= 0.0:
            raise CovarianceError(f"covariance is not positive definite: {cov.tolist()}")


@dataclass(frozen=True)
class Application:
    """A service application: target mixture plus a priority in [0, 1]."""

    app_id: int
    targets: tuple[GaussianTarget, ...]
    priority: float

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if not self.targets:
            raise ValueError(f"application {self.app_id} has no targets")
        if not 0.0 <= self.priority <= 1.0:
            raise ValueError(f"priority must lie in [0, 1], got {self.priority}")


@dataclass(frozen=True)
class HeatMap:
    """Priority-weighted sum of per-application Gaussian mixtures."""

    applications: tuple[Application, ...]

    def __post_init__(self):
        object.__setattr__(self, "applications", tuple(self.applications))
        if not self.applications:
            raise ValueError("heat map needs at least one application")
        total = sum(a.priority for a in self.applications)
        if abs(total - 1.0) > _ALPHA_SUM_TOL:
            raise ValueError(f"application priorities must sum to 1 (got {total!r})")

    @cached_property
    def _packed(self):
        """Flattened (means, precisions, amplitudes) over all components."""
        means, precs, amps = [], [], []
        for app in self.applications:
            share = app.priority / len(app.targets)
            for tgt in app.targets:
                det = tgt.cov[0, 0] * tgt.cov[1, 1] - tgt.cov[0, 1] * tgt.cov[1, 0]
                means.append(tgt.mean)
                precs.append(np.linalg.inv(tgt.cov))
                amps.append(share / (2.0 * math.pi * math.sqrt(det)))
        return (
            np.ascontiguousarray(means, dtype=float),
            np.ascontiguousarray(precs, dtype=float),
            np.ascontiguousarray(amps, dtype=float),
        )

    def density(self, r) -> np.ndarray:
        """Field value at points shaped (..., 2); returns matching (...)."""
        pts = np.asarray(r, dtype=float)
        flat = pts.reshape(-1, 2)
        means, precs, amps = self._packed
        out = _kernels.heat_eval(flat, means, precs, amps)
        return out.reshape(pts.shape[:-1]) if pts.ndim > 1 else float(out[0])


def _mixture_eval(app: Application, pts: np.ndarray) -> np.ndarray:
    means = np.array([t.mean for t in app.targets])
    precs = np.array([np.linalg.inv(t.cov) for t in app.targets])
    dets = np.array([np.linalg.det(t.cov) for t in app.targets])
    amps = 1.0 / (len(app.targets) * 2.0 * math.pi * np.sqrt(dets))
    return _kernels.heat_eval(np.ascontiguousarray(pts, dtype=float), means, precs, amps)


def eval_component(r, app: Application):
    """Density of one application's target mixture (priority not applied).

    Each target contributes a normalized bivariate Gaussian scaled by
    1/(number of targets), so the mixture integrates to one over the plane.
    """
    pts = np.asarray(r, dtype=float)
    flat = pts.reshape(-1, 2)
    out = _mixture_eval(app, flat)
    return out.reshape(pts.shape[:-1]) if pts.ndim > 1 else float(out[0])


def eval_sdhm(r, heat: HeatMap):
    """Full heat-map density: priority-weighted sum over applications."""
    return heat.density(r)


class PolygonIntegral(NamedTuple):
    mass: float
    first_moment: np.ndarray  # (2,)
    area: float


def _rule_contrib(eval_pts_fn, tris: np.ndarray) -> np.ndarray:
    """Per-triangle [mass, moment_x, moment_y] under the degree-5 rule."""
    pts = np.einsum("kb,tbv->tkv", _RULE_NODES, tris)  # (T, 7, 2)
    vals = eval_pts_fn(pts.reshape(-1, 2)).reshape(pts.shape[0], 7)
    area = np.abs(geometry.triangle_signed_area(tris))
    mass = area * (vals @ _RULE_WEIGHTS)
    mx = area * ((vals * pts[..., 0]) @ _RULE_WEIGHTS)
    my = area * ((vals * pts[..., 1]) @ _RULE_WEIGHTS)
    return np.stack([mass, mx, my], axis=-1)


def _split4(tris: np.ndarray) -> np.ndarray:
    """Dyadic refinement: each triangle into its four midpoint children."""
    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    ab = 0.5 * (a + b)
    bc = 0.5 * (b + c)
    ca = 0.5 * (c + a)
    children = np.empty((tris.shape[0], 4, 3, 2))
    children[:, 0, 0], children[:, 0, 1], children[:, 0, 2] = a, ab, ca
    children[:, 1, 0], children[:, 1, 1], children[:, 1, 2] = ab, b, bc
    children[:, 2, 0], children[:, 2, 1], children[:, 2, 2] = ca, bc, c
    children[:, 3, 0], children[:, 3, 1], children[:, 3, 2] = ab, bc, ca
    return children.reshape(-1, 3, 2)


def integrate_triangles(eval_pts_fn, tris: np.ndarray, rel_tol: float = QUAD_REL_TOL):
    """Adaptive integral of [f, x f, y f] over a triangle collection.

    Breadth-first dyadic subdivision: a triangle is accepted once its
    4-child refinement changes the local result by less than ``rel_tol``
    relative (with a tiny absolute floor), so successive refinements agree
    to the requested tolerance.
    """
    total = np.zeros(3)
    active = np.asarray(tris, dtype=float)
    coarse = _rule_contrib(eval_pts_fn, active)
    for _ in range(_MAX_DEPTH):
        children = _split4(active)
        child_vals = _rule_contrib(eval_pts_fn, children)
        fine = child_vals.reshape(-1, 4, 3).sum(axis=1)
        err = np.max(np.abs(fine - coarse), axis=1)
        scale = np.max(np.abs(fine), axis=1)
        done = err <= rel_tol * scale + 1e-30
        if np.any(done):
            total += fine[done].sum(axis=0)
        keep = ~done
        if not np.any(keep):
            return total
        mask = np.repeat(keep, 4)
        active = children[mask]
        coarse = child_vals[mask]
        if active.shape[0] > _MAX_ACTIVE:
            break
    # depth or size cap: accept the current refinement
    total += coarse.reshape(-1, 3).sum(axis=0)
    return total


def integrate_polygon(heat: HeatMap, polygon, rel_tol: float = QUAD_REL_TOL) -> PolygonIntegral:
    """Mass, first moment, and area of the heat map over a convex CCW polygon."""
    verts = geometry.require_convex_ccw(polygon, what="integration region")
    k = verts.shape[0]
    tris = np.stack(
        [np.repeat(verts[0:1], k - 2, axis=0), verts[1 : k - 1], verts[2:k]],
        axis=1,
    )
    means, precs, amps = heat._packed

    def eval_pts(pts):
        return _kernels.heat_eval(pts, means, precs, amps)

    mass, mx, my = integrate_triangles(eval_pts, tris, rel_tol)
    area = geometry.polygon_signed_area(verts)
    return PolygonIntegral(float(mass), np.array([mx, my]), float(area))


def bounding_box_polygon(app: Application, n_std: float = 8.0) -> np.ndarray:
    """Axis-aligned CCW rectangle covering all targets plus ``n_std`` max-std margins."""
    means = np.array([t.mean for t in app.targets])
    stds = np.array([math.sqrt(max(np.linalg.eigvalsh(t.cov))) for t in app.targets])
    pad = n_std * stds.max()
    lo = means.min(axis=0) - pad
    hi = means.max(axis=0) + pad
    return np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]]])
