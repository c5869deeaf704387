"""Decentralized coordination loop over the full nonlinear vehicle team.

Leaders track the blended path from their reference to their planned
position; every follower tracks the time-varying convex combination of its
in-neighbors' measured positions.  All desired inputs within a tick are
computed from the same position snapshot, so the loop is deterministic and
order-independent.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import _kernels, quadcopter as qc, weights as wt
from .errors import CoordinationError, DivergenceError, ScenarioError, SingularityError
from .planner import Plan

CSV_HEADER = "t,agent_id,x,y,z,xd,yd,zd,phi,theta,psi,f"


@dataclass(frozen=True)
class Trajectory:
    """Uniform-grid log of every agent's state and desired input."""

    times: np.ndarray  # (T,)
    agent_ids: tuple[int, ...]
    states: np.ndarray  # (T, N, 14)
    desired: np.ndarray  # (T, N, 3)

    @property
    def positions(self) -> np.ndarray:
        return self.states[:, :, 0:3]

    def index_of(self, agent_id: int) -> int:
        return self.agent_ids.index(agent_id)


@dataclass
class MetricsReport:
    max_tracking_error: float
    final_deviation: float
    min_pairwise_planar_distance: float
    safety_flagged: bool
    safety_distance: float
    settling_time: dict[int, float | None] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "max_tracking_error": self.max_tracking_error,
            "final_deviation": self.final_deviation,
            "min_pairwise_planar_distance": self.min_pairwise_planar_distance,
            "safety_flagged": self.safety_flagged,
            "safety_distance": self.safety_distance,
            "settling_time": {str(i): t for i, t in sorted(self.settling_time.items())},
        }


def desired_input(
    agent_id: int,
    t: float,
    live_positions: Mapping[int, np.ndarray],
    plan: Plan,
    altitudes: Mapping[int, float],
    reference: Mapping[int, np.ndarray],
) -> np.ndarray:
    """Desired 3D position of one agent given the current measured positions.

    Leaders blend reference -> planned position along the quintic schedule;
    followers take the weighted combination of their in-neighbors' measured
    planar positions.  The vertical component is the agent's assigned altitude.
    """
    sched = plan.schedule
    out = np.empty(3)
    out[2] = float(altitudes[agent_id])
    if agent_id in plan.graph.layers[0]:
        b = wt.beta(t, sched.t0, sched.tf)
        a = np.asarray(reference[agent_id], dtype=float)
        p = plan.desired.positions[agent_id]
        out[0:2] = p[0:2] if t >= sched.tf else (1.0 - b) * a[0:2] + b * p[0:2]
        return out
    triple = plan.graph.in_neighbors[agent_id]
    missing = [j for j in triple if j not in live_positions]
    if missing:
        raise CoordinationError(f"agent {agent_id} lacks positions for neighbors {missing}")
    w = wt.weight_at(t, sched, agent_id)
    planar = np.zeros(2)
    for wj, j in zip(w, triple):
        planar += wj * np.asarray(live_positions[j], dtype=float)[0:2]
    out[0:2] = planar
    return out


def run(scenario, plan: Plan) -> Trajectory:
    """Simulate the team from the reference formation to ``t_end``."""
    _check_consistency(scenario, plan)
    sched = scenario.schedule
    ids = tuple(sorted(scenario.config.ids))
    index = {a: k for k, a in enumerate(ids)}
    n = len(ids)

    pos_ref = scenario.config.positions_by_id()
    a_pl = np.array([pos_ref[i] for i in ids])
    p_pl = np.array([plan.desired.positions[i] for i in ids])
    altitude = resolve_altitudes(scenario, plan.graph)
    alt = np.array([altitude[i] for i in ids])

    leader = np.zeros(n, dtype=np.int8)
    for i in plan.graph.layers[0]:
        leader[index[i]] = 1
    nbr = np.zeros((n, 3), dtype=np.int64)
    omega = np.zeros((n, 3))
    varpi = np.zeros((n, 3))
    for i in plan.graph.follower_ids:
        k = index[i]
        triple = plan.graph.in_neighbors[i]
        for j in triple:
            if j not in index:
                raise CoordinationError(f"follower {i} names unknown neighbor {j}")
        nbr[k] = [index[j] for j in triple]
        omega[k] = plan.schedule.initial[i].values
        varpi[k] = plan.schedule.final[i].values

    gains = qc.design_gains(
        scenario.vehicle.poles_translational,
        scenario.vehicle.poles_yaw,
        scenario.vehicle.mass,
    )
    s0 = np.stack([qc.hover_state([a_pl[k, 0], a_pl[k, 1], alt[k]], gains.mass) for k in range(n)])

    n_steps = int(round((sched.t_end - sched.t0) / sched.dt))
    states, desired, status, agent_k, step = _kernels.sim_loop(
        s0, leader, a_pl, p_pl, alt, nbr, omega, varpi,
        sched.t0, sched.tf, sched.dt, n_steps, gains.K, gains.mass,
    )
    if status == _kernels.SIM_SINGULAR:
        t_fail = sched.t0 + step * sched.dt
        raise SingularityError(
            f"agent {ids[agent_k]} hit an input-map singularity at t={t_fail:.3f} s"
        )
    if status == _kernels.SIM_DIVERGED:
        t_fail = sched.t0 + step * sched.dt
        raise DivergenceError(
            f"agent {ids[agent_k]} diverged at t={t_fail:.3f} s",
            agent_id=ids[agent_k],
            time=t_fail,
        )
    times = sched.t0 + sched.dt * np.arange(n_steps + 1)
    return Trajectory(times=times, agent_ids=ids, states=states, desired=desired)


def _check_consistency(scenario, plan: Plan):
    ids = set(scenario.config.ids)
    if set(plan.graph.all_ids) != ids:
        raise ScenarioError("plan graph does not cover the scenario agent set")
    if set(plan.graph.boundary_ids) != set(scenario.boundary_targets):
        raise ScenarioError("plan boundary does not match the scenario boundary targets")
    sched = scenario.schedule
    if not (plan.schedule.t0 == sched.t0 and plan.schedule.tf == sched.tf):
        raise ScenarioError("plan blend window differs from the scenario schedule")
    if sched.t_end < sched.tf:
        raise ScenarioError("t_end must not precede tf")
    if not 0.0 < sched.dt <= qc.DT_MAX:
        raise ScenarioError(f"dt must lie in (0, {qc.DT_MAX}]")


def resolve_altitudes(scenario, graph) -> dict[int, float]:
    """Layer-stratified altitude per agent, with per-agent overrides."""
    spec = scenario.altitude
    out: dict[int, float] = {}
    for l, layer in enumerate(graph.layers):
        for i in layer:
            out[i] = spec.base + spec.step * l
    out.update(spec.overrides)
    bad = sorted(i for i, z in out.items() if z <= 0.0)
    if bad:
        raise ScenarioError(f"altitudes must be positive (agents {bad})")
    return out


def metrics(
    traj: Trajectory,
    plan: Plan,
    settle_tol: float = 0.05,
    safety_distance: float = 0.5,
) -> MetricsReport:
    """Tracking/deviation/safety summary of a completed trajectory."""
    pos = traj.positions
    err3 = np.linalg.norm(pos - traj.desired, axis=2)
    p_pl = np.array([plan.desired.positions[i] for i in traj.agent_ids])
    dev = np.linalg.norm(pos[:, :, 0:2] - p_pl[None, :, :], axis=2)  # (T, N)

    min_d = np.inf
    chunk = max(1, int(2_000_000 / max(1, pos.shape[1] ** 2)))
    for lo in range(0, pos.shape[0], chunk):
        block = pos[lo : lo + chunk, :, 0:2]
        diff = block[:, :, None, :] - block[:, None, :, :]
        d2 = np.sum(diff * diff, axis=-1)
        n = d2.shape[1]
        d2[:, np.arange(n), np.arange(n)] = np.inf
        min_d = min(min_d, float(np.sqrt(d2.min())))

    settling: dict[int, float | None] = {}
    for k, agent in enumerate(traj.agent_ids):
        bad = dev[:, k] > settle_tol
        if bad[-1]:
            settling[agent] = None
        elif not bad.any():
            settling[agent] = float(traj.times[0])
        else:
            last_bad = int(np.nonzero(bad)[0][-1])
            settling[agent] = float(traj.times[last_bad + 1])

    return MetricsReport(
        max_tracking_error=float(err3.max()),
        final_deviation=float(dev[-1].max()),
        min_pairwise_planar_distance=min_d,
        safety_flagged=bool(min_d < safety_distance),
        safety_distance=safety_distance,
        settling_time=settling,
    )


def write_trajectory_csv(traj: Trajectory, path) -> str:
    """Write the canonical per-tick CSV; returns the file's sha256 hex digest."""
    digest = hashlib.sha256()
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        line = CSV_HEADER + "\n"
        digest.update(line.encode("ascii"))
        fh.write(line)
        fmt = "%.12g,%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n"
        chunk: list[str] = []
        for k, t in enumerate(traj.times):
            srow = traj.states[k]
            drow = traj.desired[k]
            for j, agent in enumerate(traj.agent_ids):
                chunk.append(
                    fmt
                    % (
                        t,
                        agent,
                        srow[j, 0],
                        srow[j, 1],
                        srow[j, 2],
                        drow[j, 0],
                        drow[j, 1],
                        drow[j, 2],
                        srow[j, 6],
                        srow[j, 7],
                        srow[j, 8],
                        srow[j, 12],
                    )
                )
            if len(chunk) >= 20000:
                block = "".join(chunk)
                digest.update(block.encode("ascii"))
                fh.write(block)
                chunk = []
        if chunk:
            block = "".join(chunk)
            digest.update(block.encode("ascii"))
            fh.write(block)
    return digest.hexdigest()


def read_trajectory_csv(path):
    """Load a trajectory CSV back into (times, agent_ids, positions, desired).

    Positions and desired come back shaped (T, N, 3); rows must be complete
    time blocks in the order the writer emits.
    """
    data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.float64)
    if data.ndim == 1:
        data = data[None, :]
    agent_ids = np.unique(data[:, 1].astype(np.int64))
    n = agent_ids.size
    if data.shape[0] % n != 0:
        raise ScenarioError("trajectory CSV has ragged time blocks")
    t_count = data.shape[0] // n
    times = data[::n, 0].copy()
    order = np.argsort(data[: n, 1], kind="stable")
    blocks = data.reshape(t_count, n, data.shape[1])[:, order, :]
    positions = blocks[:, :, 2:5].copy()
    desired = blocks[:, :, 5:8].copy()
    return times, tuple(int(i) for i in np.sort(agent_ids)), positions, desired
