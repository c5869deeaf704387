"""Barycentric communication weights and the time-varying blend schedule."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import SingularSimplexError

#: Minimum-jerk quintic coefficients for s^3, s^4, s^5 (zero velocity and
#: acceleration at both endpoints).
BETA_COEFFS = (10.0, -15.0, 6.0)

#: Weight components below this are treated as outside the simplex.
EXTERIOR_TOL = -1e-12

_RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class WeightTriple:
    """Weights of one follower toward its ordered in-neighbor triple."""

    neighbors: tuple[int, int, int]
    values: np.ndarray  # (3,), sums to 1

    def __post_init__(self):
        object.__setattr__(self, "neighbors", tuple(int(i) for i in self.neighbors))
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != (3,):
            raise ValueError("weight triple needs exactly 3 values")
        if abs(float(vals.sum()) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1 (got {vals.sum()!r})")


@dataclass(frozen=True)
class WeightSchedule:
    """Initial and final weight triples per follower plus the blend window."""

    initial: dict[int, WeightTriple]
    final: dict[int, WeightTriple]
    t0: float
    tf: float

    def __post_init__(self):
        if self.tf <= self.t0:
            raise ValueError(f"tf must exceed t0 (got {self.t0} .. {self.tf})")
        if set(self.initial) != set(self.final):
            raise ValueError("initial and final schedules cover different followers")
        for i, tri in self.initial.items():
            if tri.neighbors != self.final[i].neighbors:
                raise ValueError(f"follower {i} has mismatched neighbor triples")

    @property
    def follower_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.initial))


def solve_simplex_weights(p, triangle):
    """Barycentric weights of ``p`` w.r.t. an ordered triangle, via a 3x3 solve.

    Returns ``(values, exterior)`` where ``values`` reproduces ``p`` as the
    weighted vertex combination with unit sum, and ``exterior`` flags a
    clearly negative component (point outside the triangle).  A triangle with
    |signed area| <= 1e-12 raises :class:`SingularSimplexError`.
    """
    p = np.asarray(p, dtype=float)
    tri = np.asarray(triangle, dtype=float)
    if tri.shape != (3, 2):
        raise ValueError("triangle must have shape (3, 2)")
    area = geometry.triangle_signed_area(tri)
    if abs(area) <= geometry.AREA_EPS:
        raise SingularSimplexError(f"triangle has |area| {abs(area):g} <= {geometry.AREA_EPS:g}")
    lhs = np.vstack([tri.T, np.ones(3)])
    rhs = np.array([p[0], p[1], 1.0])
    w = np.linalg.solve(lhs, rhs)
    residual = float(np.linalg.norm(tri.T @ w - p))
    if residual >= _RESIDUAL_TOL:
        raise SingularSimplexError(
            f"barycentric solve residual {residual:g} exceeds {_RESIDUAL_TOL:g}"
        )
    return w, bool(w.min() < EXTERIOR_TOL)


def beta(t: float, t0: float, tf: float) -> float:
    """Minimum-jerk quintic ramp from 0 at ``t0`` to 1 at ``tf`` (1 afterwards)."""
    if tf <= t0:
        raise ValueError(f"tf must exceed t0 (got {t0} .. {tf})")
    if t < t0:
        raise ValueError(f"t={t} precedes the schedule start {t0}")
    if t >= tf:
        return 1.0
    s = (t - t0) / (tf - t0)
    c3, c4, c5 = BETA_COEFFS
    return s * s * s * (c3 + s * (c4 + s * c5))


def weight_at(t: float, schedule: WeightSchedule, follower_id: int) -> np.ndarray:
    """Blended weight values for one follower at time ``t``.

    Exactly the initial triple at ``t0`` and exactly the final triple for
    ``t >= tf``; a convex blend in between.  Unknown ids raise ``KeyError``.
    """
    if follower_id not in schedule.initial:
        raise KeyError(f"unknown follower id {follower_id}")
    omega = schedule.initial[follower_id].values
    varpi = schedule.final[follower_id].values
    if t >= schedule.tf:
        return varpi.copy()
    b = beta(t, schedule.t0, schedule.tf)
    return (1.0 - b) * omega + b * varpi
