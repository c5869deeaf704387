"""Scenario file parsing and validation.

Scenarios are human-editable YAML with these sections::

    name: desk16
    agents:                       # reference formation
      - {id: 1, pos: [0.0, 0.0]}
    boundary: [1, 2, 3]           # optional explicit boundary id list
    applications:
      - alpha: 0.6
        targets:
          - {pos: [12.0, 3.0], cov: [[0.8, 0.1], [0.1, 0.5]]}
        zone: [[10, 0], [14, 0], [14, 6], [10, 6]]   # render-only outline
    boundary_targets:
      - {id: 1, pos: [10.0, -2.0]}
    vehicle: {mass: 1.2, poles_translational: [-2, -2.5, -3, -3.5], poles_yaw: [-3, -4]}
    schedule: {t0: 0.0, tf: 60.0, t_end: 120.0, dt: 0.02}
    altitude: {base: 10.0, step: 1.0, overrides: {5: 12.0}}
    output: {dir: out, frame_times: [15, 35, 80]}

The plan artifact records a hash of the parsed scenario content so stale
plan/scenario pairs are rejected at simulation time.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .errors import ScenarioError
from .formation import ReferenceConfiguration
from .heatmap import Application, GaussianTarget, HeatMap

OUTPUT_DIR_ENV = "AIRCOVER_OUT_DIR"


@dataclass(frozen=True)
class VehicleParams:
    mass: float = 1.2
    poles_translational: tuple[float, ...] = (-2.0, -2.5, -3.0, -3.5)
    poles_yaw: tuple[float, ...] = (-3.0, -4.0)


@dataclass(frozen=True)
class Schedule:
    t0: float
    tf: float
    t_end: float
    dt: float


@dataclass(frozen=True)
class AltitudeSpec:
    base: float = 10.0
    step: float = 1.0
    overrides: dict[int, float] = field(default_factory=dict)


@dataclass(frozen=True)
class OutputSpec:
    dir: str = "out"
    frame_times: tuple[float, ...] = ()


@dataclass(frozen=True)
class Scenario:
    name: str
    config: ReferenceConfiguration
    heat: HeatMap
    boundary_targets: dict[int, np.ndarray]
    vehicle: VehicleParams
    schedule: Schedule
    altitude: AltitudeSpec
    output: OutputSpec
    zones: tuple[np.ndarray, ...]
    content_hash: str

    def output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_DIR_ENV, self.output.dir))


def content_hash(raw: dict) -> str:
    """Whitespace-insensitive hash of the parsed scenario content."""
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _need(raw: dict, key: str):
    if key not in raw:
        raise ScenarioError(f"scenario is missing required section '{key}'")
    return raw[key]


def _as_pos(value, where: str) -> np.ndarray:
    try:
        p = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{where}: position must be a numeric pair, got {value!r}") from exc
    if p.shape != (2,) or not np.all(np.isfinite(p)):
        raise ScenarioError(f"{where}: position must be a finite [x, y] pair, got {value!r}")
    return p


def parse_scenario(raw: dict, name_fallback: str = "scenario") -> Scenario:
    """Validate a parsed YAML mapping and build the immutable scenario."""
    if not isinstance(raw, dict):
        raise ScenarioError("scenario file must contain a mapping at the top level")
    name = str(raw.get("name", name_fallback))

    agents_raw = _need(raw, "agents")
    agents = []
    for k, item in enumerate(agents_raw):
        if not isinstance(item, dict) or "id" not in item or "pos" not in item:
            raise ScenarioError(f"agents[{k}]: expected {{id, pos}} mapping")
        agents.append((int(item["id"]), _as_pos(item["pos"], f"agents[{k}]")))
    try:
        config = ReferenceConfiguration.from_agents(agents, boundary=raw.get("boundary"))
    except ScenarioError:
        raise
    except Exception as exc:
        raise ScenarioError(f"agents: {exc}") from exc

    apps_raw = _need(raw, "applications")
    if not apps_raw:
        raise ScenarioError("applications: need at least one application")
    apps = []
    zones = []
    alpha_total = 0.0
    for k, item in enumerate(apps_raw):
        where = f"applications[{k}]"
        if not isinstance(item, dict) or "alpha" not in item or "targets" not in item:
            raise ScenarioError(f"{where}: expected {{alpha, targets}} mapping")
        alpha = float(item["alpha"])
        alpha_total += alpha
        targets = []
        for j, tgt in enumerate(item["targets"]):
            tw = f"{where}.targets[{j}]"
            if not isinstance(tgt, dict) or "pos" not in tgt or "cov" not in tgt:
                raise ScenarioError(f"{tw}: expected {{pos, cov}} mapping")
            cov = np.asarray(tgt["cov"], dtype=float)
            try:
                targets.append(GaussianTarget(_as_pos(tgt["pos"], tw), cov))
            except Exception as exc:
                raise ScenarioError(f"{tw}: {exc}") from exc
        try:
            apps.append(Application(app_id=k + 1, targets=tuple(targets), priority=alpha))
        except Exception as exc:
            raise ScenarioError(f"{where}: {exc}") from exc
        if "zone" in item and item["zone"] is not None:
            zone = np.asarray(item["zone"], dtype=float)
            if zone.ndim != 2 or zone.shape[1] != 2 or zone.shape[0] < 3:
                raise ScenarioError(f"{where}.zone: expected a list of [x, y] vertices")
            zones.append(zone)
    if abs(alpha_total - 1.0) > 1e-9:
        raise ScenarioError(
            f"applications: priorities must sum to 1 (got {alpha_total!r}); "
            "rescale the alpha values"
        )
    try:
        heat = HeatMap(tuple(apps))
    except Exception as exc:
        raise ScenarioError(f"applications: {exc}") from exc

    bt_raw = _need(raw, "boundary_targets")
    boundary_targets: dict[int, np.ndarray] = {}
    known = set(config.ids)
    for k, item in enumerate(bt_raw):
        where = f"boundary_targets[{k}]"
        if not isinstance(item, dict) or "id" not in item or "pos" not in item:
            raise ScenarioError(f"{where}: expected {{id, pos}} mapping")
        bid = int(item["id"])
        if bid not in known:
            raise ScenarioError(f"{where}: unknown agent id {bid}")
        if bid in boundary_targets:
            raise ScenarioError(f"{where}: duplicate target for agent {bid}")
        boundary_targets[bid] = _as_pos(item["pos"], where)

    sched_raw = _need(raw, "schedule")
    try:
        schedule = Schedule(
            t0=float(sched_raw["t0"]),
            tf=float(sched_raw["tf"]),
            t_end=float(sched_raw["t_end"]),
            dt=float(sched_raw["dt"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"schedule: expected numeric t0, tf, t_end, dt ({exc})") from exc
    if not schedule.t0 < schedule.tf <= schedule.t_end:
        raise ScenarioError(
            f"schedule: need t0 < tf <= t_end, got {schedule.t0}, {schedule.tf}, {schedule.t_end}"
        )
    if not 0.0 < schedule.dt <= 0.02:
        raise ScenarioError(f"schedule: dt must lie in (0, 0.02], got {schedule.dt}")

    veh_raw = raw.get("vehicle", {}) or {}
    vehicle = VehicleParams(
        mass=float(veh_raw.get("mass", 1.2)),
        poles_translational=tuple(float(p) for p in veh_raw.get("poles_translational", (-2.0, -2.5, -3.0, -3.5))),
        poles_yaw=tuple(float(p) for p in veh_raw.get("poles_yaw", (-3.0, -4.0))),
    )
    if vehicle.mass <= 0.0:
        raise ScenarioError("vehicle: mass must be positive")

    alt_raw = raw.get("altitude", {}) or {}
    altitude = AltitudeSpec(
        base=float(alt_raw.get("base", 10.0)),
        step=float(alt_raw.get("step", 1.0)),
        overrides={int(i): float(z) for i, z in (alt_raw.get("overrides") or {}).items()},
    )
    bad_override = sorted(set(altitude.overrides) - known)
    if bad_override:
        raise ScenarioError(f"altitude.overrides: unknown agent ids {bad_override}")

    out_raw = raw.get("output", {}) or {}
    output = OutputSpec(
        dir=str(out_raw.get("dir", "out")),
        frame_times=tuple(float(t) for t in out_raw.get("frame_times", ())),
    )

    return Scenario(
        name=name,
        config=config,
        heat=heat,
        boundary_targets=boundary_targets,
        vehicle=vehicle,
        schedule=schedule,
        altitude=altitude,
        output=output,
        zones=tuple(zones),
        content_hash=content_hash(raw),
    )


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario YAML file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ScenarioError(f"{path}: YAML parse error{where}: {exc}") from exc
    return parse_scenario(raw, name_fallback=path.stem)
