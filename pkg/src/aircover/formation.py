"""Layered communication graph construction from a reference formation.

Agents occupying the convex-hull vertices are boundary leaders; the interior
agent closest (in summed distance) to the boundary is the core leader.  All
remaining agents are followers, assigned layer by layer: a follower joins the
first layer in which some triangle of already-assigned agents strictly
encloses its reference position, and adopts the minimum-area such triangle as
its communication simplex.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Mapping

import numpy as np

from . import geometry
from .errors import (
    BoundaryMismatchError,
    InfeasibleFormationError,
    NoInteriorAgentError,
    ScenarioError,
)

#: Followers must sit inside their simplex with at least this barycentric margin.
BARY_MARGIN = 1e-6

#: Reference positions closer than this are considered coincident.
MIN_SEPARATION = 1e-9


@dataclass(frozen=True)
class ReferenceConfiguration:
    """Agent ids with reference positions and an optional explicit boundary list."""

    ids: tuple[int, ...]
    positions: np.ndarray  # (N, 2), row i belongs to ids[i]
    boundary_hint: tuple[int, ...] | None = None

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "ids", tuple(int(i) for i in self.ids))
        n = len(self.ids)
        if pos.shape != (n, 2):
            raise ScenarioError(f"positions must be ({n}, 2), got {pos.shape}")
        if len(set(self.ids)) != n:
            raise ScenarioError("agent ids must be unique")
        if n < 4:
            raise ScenarioError(f"need at least 4 agents, got {n}")
        if not np.all(np.isfinite(pos)):
            raise ScenarioError("reference positions must be finite")
        if geometry.min_pairwise_distance(pos) <= MIN_SEPARATION:
            raise ScenarioError(
                f"two reference positions coincide (separation <= {MIN_SEPARATION:g} m)"
            )

    @classmethod
    def from_agents(cls, agents, boundary=None):
        """Build from an iterable of (id, (x, y)) pairs."""
        ids = tuple(int(a) for a, _ in agents)
        pos = np.array([p for _, p in agents], dtype=float)
        hint = tuple(int(b) for b in boundary) if boundary is not None else None
        return cls(ids, pos, hint)

    @property
    def index_of(self) -> dict[int, int]:
        return {a: k for k, a in enumerate(self.ids)}

    def position_of(self, agent_id: int) -> np.ndarray:
        return self.positions[self.index_of[agent_id]]

    def positions_by_id(self) -> dict[int, np.ndarray]:
        return {a: self.positions[k] for k, a in enumerate(self.ids)}


@dataclass(frozen=True)
class LayeredGraph:
    """Layer partition plus per-follower in-neighbor triples.

    ``layers[0]`` holds the leaders (boundary + core); every other agent
    appears in exactly one later layer and carries an ordered 3-tuple of
    in-neighbor ids drawn from earlier layers.
    """

    layers: tuple[tuple[int, ...], ...]
    in_neighbors: dict[int, tuple[int, int, int]]
    core_id: int
    boundary_ids: tuple[int, ...]

    @property
    def depth(self) -> int:
        """Index of the last layer (0 when there are no followers)."""
        return len(self.layers) - 1

    @property
    def all_ids(self) -> tuple[int, ...]:
        return tuple(sorted(i for layer in self.layers for i in layer))

    @property
    def follower_ids(self) -> tuple[int, ...]:
        return tuple(sorted(i for layer in self.layers[1:] for i in layer))

    def layer_of(self, agent_id: int) -> int:
        for l, layer in enumerate(self.layers):
            if agent_id in layer:
                return l
        raise KeyError(agent_id)

    def cumulative_set(self, l: int) -> frozenset[int]:
        """Reachable-source set for layer ``l``: the union of layers 0..l,
        except that the final layer stands alone."""
        m = self.depth
        if l < 0 or l > m:
            raise IndexError(l)
        if l == 0 or l == m:
            return frozenset(self.layers[l])
        out: set[int] = set()
        for k in range(l + 1):
            out.update(self.layers[k])
        return frozenset(out)

    def connection_set(self, agent_id: int, l: int) -> frozenset[int]:
        """Ids feeding agent ``agent_id`` from layer ``l - 1``: its in-neighbor
        triple when the agent lives in layer ``l``, else the agent itself."""
        if l < 1 or l > self.depth:
            raise IndexError(l)
        if agent_id in self.layers[l]:
            return frozenset(self.in_neighbors[agent_id])
        if agent_id in self.cumulative_set(l):
            return frozenset((agent_id,))
        raise KeyError(f"agent {agent_id} is not reachable at layer {l}")

    def to_dict(self) -> dict:
        return {
            "layers": [list(layer) for layer in self.layers],
            "in_neighbors": {str(i): list(t) for i, t in sorted(self.in_neighbors.items())},
            "core_id": self.core_id,
            "boundary_ids": list(self.boundary_ids),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LayeredGraph":
        return cls(
            layers=tuple(tuple(int(i) for i in layer) for layer in d["layers"]),
            in_neighbors={int(i): tuple(t) for i, t in d["in_neighbors"].items()},
            core_id=int(d["core_id"]),
            boundary_ids=tuple(int(i) for i in d["boundary_ids"]),
        )


@dataclass
class ValidationReport:
    """Outcome of :func:`validate_dnn`; empty ``violations`` means valid."""

    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, msg: str):
        self.violations.append(msg)


def classify_boundary(config: ReferenceConfiguration):
    """Split agents into hull-vertex (boundary) and interior id tuples.

    Agents lying on a hull edge between two vertices count as interior.
    Raises on a degenerate hull, or when an explicit boundary list disagrees
    with the computed hull vertex set.
    """
    hull_idx = geometry.convex_hull_indices(config.positions)
    boundary = tuple(sorted(config.ids[k] for k in hull_idx))
    interior = tuple(sorted(set(config.ids) - set(boundary)))
    if config.boundary_hint is not None and set(config.boundary_hint) != set(boundary):
        raise BoundaryMismatchError(
            f"explicit boundary list {sorted(config.boundary_hint)} does not match "
            f"hull vertices {list(boundary)}"
        )
    return boundary, interior


def select_core_leader(boundary_ids, interior_ids, positions: Mapping[int, np.ndarray]) -> int:
    """Interior agent minimizing the summed distance to all boundary agents.

    Ties break toward the smallest id.
    """
    interior = sorted(int(i) for i in interior_ids)
    if not interior:
        raise NoInteriorAgentError("no interior agent available as core leader")
    bpos = np.array([positions[int(b)] for b in boundary_ids], dtype=float)
    best_id, best_sum = None, np.inf
    for j in interior:
        total = float(np.sum(np.linalg.norm(bpos - np.asarray(positions[j], dtype=float), axis=1)))
        if total < best_sum:
            best_id, best_sum = j, total
    return best_id


def _combo_array(n: int) -> np.ndarray:
    """All C(n, 3) index triples in lexicographic order."""
    return np.fromiter(
        (k for combo in combinations(range(n), 3) for k in combo),
        dtype=np.int64,
    ).reshape(-1, 3)


def _best_simplex(twice_areas, coords, combos, src_ids, claimed):
    """Smallest strictly-enclosing triangle, skipping already-claimed ones.

    Preference order is |area| ascending with lexicographic id-triple ties
    (argmin returns the first of equal entries and combos are lexicographic).
    Triangles claimed by lower-id followers in the same layer are skipped so
    that distinct followers get distinct simplices wherever possible; when
    every enclosing candidate is claimed, the overall minimum is shared.
    Returns the id triple, or None if nothing encloses the agent.
    """
    ok = np.abs(twice_areas) > 2.0 * geometry.AREA_EPS
    ok &= np.all(np.nan_to_num(coords, nan=-1.0) >= BARY_MARGIN, axis=1)
    if not np.any(ok):
        return None
    areas = np.where(ok, np.abs(twice_areas), np.inf)
    first = None
    for _ in range(len(claimed) + 1):
        best = int(np.argmin(areas))
        if not np.isfinite(areas[best]):
            break
        triple = tuple(int(src_ids[k]) for k in combos[best])
        if first is None:
            first = triple
        if triple not in claimed:
            return triple
        areas[best] = np.inf
    return first


def build_layers(config: ReferenceConfiguration, v0) -> LayeredGraph:
    """Assign followers to layers greedily and pick each one's simplex.

    ``v0`` must be the boundary hull vertices plus exactly one interior core.
    Within a layer, followers are processed in ascending id order and each
    takes its minimum-area strictly-enclosing candidate triangle that no
    earlier follower in the layer has claimed (exact area ties resolve to the
    lexicographically smallest id triple).  Skipping claimed triangles keeps
    planned positions distinct downstream: followers sharing a simplex would
    later be assigned the same desired position.  The construction is
    deterministic for identical inputs.
    """
    v0 = sorted(int(i) for i in v0)
    boundary, interior = classify_boundary(config)
    extras = sorted(set(v0) - set(boundary))
    if set(boundary) - set(v0):
        raise ScenarioError("layer 0 must contain every boundary agent")
    if len(extras) != 1:
        raise ScenarioError(
            f"layer 0 must be the boundary plus exactly one core agent, got extras {extras}"
        )
    core = extras[0]
    if core not in interior:
        raise ScenarioError(f"core agent {core} is not interior")

    pos = config.positions_by_id()
    remaining = sorted(set(config.ids) - set(v0))
    layers: list[tuple[int, ...]] = [tuple(v0)]
    in_neighbors: dict[int, tuple[int, int, int]] = {}
    sources = list(v0)  # already-assigned agents, kept sorted

    while remaining:
        src_ids = np.array(sorted(sources), dtype=np.int64)
        src_pos = np.array([pos[i] for i in src_ids], dtype=float)
        combos = _combo_array(len(src_ids))
        tri_pts = src_pos[combos]  # (T, 3, 2)
        placed: list[int] = []
        claimed: set[tuple[int, int, int]] = set()
        for agent in remaining:
            coords, d = geometry.barycentric_batch(pos[agent], tri_pts)
            triple = _best_simplex(d, coords, combos, src_ids, claimed)
            if triple is not None:
                in_neighbors[agent] = triple
                claimed.add(triple)
                placed.append(agent)
        if not placed:
            raise InfeasibleFormationError(
                f"agents {remaining} admit no enclosing communication simplex",
                offending_ids=remaining,
            )
        layers.append(tuple(sorted(placed)))
        sources.extend(placed)
        remaining = [a for a in remaining if a not in set(placed)]

    return LayeredGraph(
        layers=tuple(layers),
        in_neighbors=in_neighbors,
        core_id=core,
        boundary_ids=tuple(boundary),
    )


def build_graph(config: ReferenceConfiguration) -> LayeredGraph:
    """Full chain: boundary classification, core selection, layer assignment."""
    boundary, interior = classify_boundary(config)
    core = select_core_leader(boundary, interior, config.positions_by_id())
    return build_layers(config, list(boundary) + [core])


def validate_dnn(graph: LayeredGraph, config: ReferenceConfiguration) -> ValidationReport:
    """Re-check every structural invariant of a layered graph; diagnostic only."""
    report = ValidationReport()
    pos = config.positions_by_id()

    ids_in_layers = [i for layer in graph.layers for i in layer]
    if len(ids_in_layers) != len(set(ids_in_layers)):
        report.add("layers are not pairwise disjoint")
    if set(ids_in_layers) != set(config.ids):
        report.add("layers do not partition the agent set")

    try:
        boundary, interior = classify_boundary(config)
        if set(graph.boundary_ids) != set(boundary):
            report.add(
                f"boundary_ids {sorted(graph.boundary_ids)} != hull vertices {list(boundary)}"
            )
        if graph.core_id not in interior:
            report.add(f"core {graph.core_id} is not an interior agent")
    except Exception as exc:  # degenerate hull etc.
        report.add(f"boundary classification failed: {exc}")

    if set(graph.layers[0]) != set(graph.boundary_ids) | {graph.core_id}:
        report.add("layer 0 is not boundary + core")

    cumulative: set[int] = set(graph.layers[0])
    for l, layer in enumerate(graph.layers):
        for i in layer:
            nbrs = graph.in_neighbors.get(i)
            if l == 0:
                if nbrs:
                    report.add(f"leader {i} has in-neighbors {nbrs}")
                continue
            if nbrs is None or len(nbrs) != 3 or len(set(nbrs)) != 3:
                report.add(f"follower {i} lacks a 3-agent in-neighbor triple")
                continue
            if not set(nbrs) <= cumulative:
                report.add(
                    f"follower {i} in layer {l} names in-neighbors {list(nbrs)} "
                    f"outside the preceding layers"
                )
                continue
            tri = np.array([pos[j] for j in nbrs], dtype=float)
            coords, d = geometry.barycentric_batch(pos[i], tri[None, :, :])
            if abs(d[0]) <= 2.0 * geometry.AREA_EPS:
                report.add(f"follower {i} has a degenerate simplex {list(nbrs)}")
            elif not np.all(coords[0] > 0.0):
                report.add(
                    f"follower {i} is not strictly inside its simplex "
                    f"(barycentric {coords[0].tolist()})"
                )
        if l > 0:
            cumulative.update(layer)

    for i in graph.in_neighbors:
        if i in graph.layers[0]:
            report.add(f"leader {i} appears in the in-neighbor map")

    return report
