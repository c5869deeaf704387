"""Single-sweep desired-position propagation and final weight extraction.

Boundary leaders take operator-chosen target positions; the core leader sits
at their mean.  Followers are then resolved one layer at a time: each one's
desired position is the heat-weighted centroid of the triangle spanned by its
in-neighbors' (already resolved) desired positions, falling back to the
geometric centroid where the map carries no mass.  Because in-neighbors always
live in earlier layers, one pass over the layers settles every agent.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import geometry, heatmap as hm
from .errors import DegenerateTargetError, SingularSimplexError
from .formation import LayeredGraph, ReferenceConfiguration
from .weights import WeightSchedule, WeightTriple, solve_simplex_weights

#: Simplices with less heat mass than this use the geometric-centroid fallback.
ZERO_MASS = 1e-12

#: Tiny negative weight components (roundoff) are clamped before renormalizing.
_CLAMP_TOL = -1e-9


@dataclass(frozen=True)
class DesiredConfiguration:
    """Planned position per agent plus each follower's desired-position simplex."""

    positions: dict[int, np.ndarray]  # id -> (2,)
    simplices: dict[int, np.ndarray]  # follower id -> (3, 2), in in-neighbor order


@dataclass(frozen=True)
class Plan:
    """Everything the simulator needs: graph, desired positions, weight schedule."""

    graph: LayeredGraph
    desired: DesiredConfiguration
    schedule: WeightSchedule

    def to_dict(self) -> dict:
        ids = sorted(self.desired.positions)
        return {
            "graph": self.graph.to_dict(),
            "omega": {
                str(i): self.schedule.initial[i].values.tolist()
                for i in self.schedule.follower_ids
            },
            "varpi": {
                str(i): self.schedule.final[i].values.tolist()
                for i in self.schedule.follower_ids
            },
            "desired_positions": {str(i): self.desired.positions[i].tolist() for i in ids},
            "beta": {"t0": self.schedule.t0, "tf": self.schedule.tf},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Plan":
        graph = LayeredGraph.from_dict(d["graph"])
        positions = {int(i): np.array(p, dtype=float) for i, p in d["desired_positions"].items()}
        simplices = {
            i: np.array([positions[j] for j in graph.in_neighbors[i]])
            for i in graph.follower_ids
        }
        initial = {
            int(i): WeightTriple(graph.in_neighbors[int(i)], np.array(v, dtype=float))
            for i, v in d["omega"].items()
        }
        final = {
            int(i): WeightTriple(graph.in_neighbors[int(i)], np.array(v, dtype=float))
            for i, v in d["varpi"].items()
        }
        schedule = WeightSchedule(initial, final, float(d["beta"]["t0"]), float(d["beta"]["tf"]))
        return cls(graph, DesiredConfiguration(positions, simplices), schedule)


def forward_pass(
    graph: LayeredGraph,
    heat: hm.HeatMap,
    boundary_targets: Mapping[int, np.ndarray],
    quad_tol: float = hm.QUAD_REL_TOL,
) -> DesiredConfiguration:
    """Resolve desired positions layer by layer in a single sweep."""
    targets = {int(i): np.asarray(p, dtype=float) for i, p in boundary_targets.items()}
    if set(targets) != set(graph.boundary_ids):
        missing = sorted(set(graph.boundary_ids) - set(targets))
        extra = sorted(set(targets) - set(graph.boundary_ids))
        raise DegenerateTargetError(
            f"boundary targets must cover exactly the boundary agents "
            f"(missing {missing}, extraneous {extra})"
        )
    tpos = np.array([targets[i] for i in sorted(targets)])
    try:
        hull = geometry.convex_hull_indices(tpos)
    except Exception as exc:
        raise DegenerateTargetError(f"boundary targets are degenerate: {exc}") from exc
    if len(hull) != len(tpos):
        raise DegenerateTargetError(
            "boundary target positions must be in convex position (every target a hull vertex)"
        )

    positions: dict[int, np.ndarray] = {i: targets[i].copy() for i in targets}
    positions[graph.core_id] = tpos.mean(axis=0)

    simplices: dict[int, np.ndarray] = {}
    for layer in graph.layers[1:]:
        for i in layer:
            tri = np.array([positions[j] for j in graph.in_neighbors[i]])
            simplices[i] = tri
            ccw = geometry.orient_ccw(tri)
            mass, moment, _area = hm.integrate_polygon(heat, ccw, rel_tol=quad_tol)
            if mass < ZERO_MASS:
                positions[i] = tri.mean(axis=0)
            else:
                positions[i] = moment / mass
    return DesiredConfiguration(positions, simplices)


def final_weights(desired: DesiredConfiguration, graph: LayeredGraph) -> dict[int, WeightTriple]:
    """Express each follower's desired position over its in-neighbor triangle."""
    out: dict[int, WeightTriple] = {}
    for i in graph.follower_ids:
        tri = desired.simplices[i]
        try:
            w, exterior = solve_simplex_weights(desired.positions[i], tri)
        except SingularSimplexError as exc:
            raise SingularSimplexError(
                f"follower {i}: desired in-neighbor triangle is degenerate ({exc})"
            ) from exc
        if w.min() < _CLAMP_TOL or exterior:
            raise SingularSimplexError(
                f"follower {i}: desired position left its simplex (weights {w.tolist()})"
            )
        w = np.clip(w, 0.0, None)
        w /= w.sum()
        out[i] = WeightTriple(graph.in_neighbors[i], w)
    return out


def initial_weights(graph: LayeredGraph, config: ReferenceConfiguration) -> dict[int, WeightTriple]:
    """Reference-configuration weights: unique and positive by construction."""
    pos = config.positions_by_id()
    out: dict[int, WeightTriple] = {}
    for i in graph.follower_ids:
        tri = np.array([pos[j] for j in graph.in_neighbors[i]])
        w, _ = solve_simplex_weights(pos[i], tri)
        out[i] = WeightTriple(graph.in_neighbors[i], w)
    return out


def plan(
    config: ReferenceConfiguration,
    heat: hm.HeatMap,
    boundary_targets: Mapping[int, np.ndarray],
    t0: float,
    tf: float,
    quad_tol: float = hm.QUAD_REL_TOL,
) -> Plan:
    """Full planning pipeline: graph, initial/final weights, desired positions."""
    from .formation import build_graph

    graph = build_graph(config)
    omega = initial_weights(graph, config)
    desired = forward_pass(graph, heat, boundary_targets, quad_tol=quad_tol)
    varpi = final_weights(desired, graph)
    schedule = WeightSchedule(initial=omega, final=varpi, t0=float(t0), tf=float(tf))
    return Plan(graph=graph, desired=desired, schedule=schedule)
