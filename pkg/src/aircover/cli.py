"""Command-line pipeline: plan, simulate, render, validate.

Exit codes: 0 on success, 1 on a domain error (validation, infeasibility,
divergence, stale plan), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import planner, render, sim
from .errors import AirCoverError, StalePlanError
from .formation import build_graph
from .scenario import load_scenario

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


def _require_file(path: str, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        print(f"error: {what} {p} does not exist", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)
    return p


def cmd_plan(args) -> int:
    scenario = load_scenario(_require_file(args.scenario, "scenario file"))
    result = planner.plan(
        scenario.config,
        scenario.heat,
        scenario.boundary_targets,
        scenario.schedule.t0,
        scenario.schedule.tf,
    )
    payload = result.to_dict()
    payload["scenario_name"] = scenario.name
    payload["scenario_hash"] = scenario.content_hash

    out_dir = scenario.output_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = Path(args.out) if args.out else out_dir / f"{scenario.name}_plan.json"
    out_path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    layers = result.graph.layers
    sizes = ", ".join(str(len(layer)) for layer in layers)
    print(f"planned {scenario.name}: N={len(scenario.config.ids)} agents, "
          f"M={result.graph.depth} follower layers (layer sizes: {sizes})")
    print(f"core leader: {result.graph.core_id}; boundary agents: {len(result.graph.boundary_ids)}")
    print(f"wrote {out_path}")
    return EXIT_OK


def load_plan(path, scenario=None) -> planner.Plan:
    """Read a plan artifact, optionally enforcing scenario-hash freshness."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if scenario is not None and payload.get("scenario_hash") != scenario.content_hash:
        raise StalePlanError(
            f"plan {path} was produced for a different scenario revision; re-run `plan`"
        )
    return planner.Plan.from_dict(payload)


def cmd_simulate(args) -> int:
    scenario = load_scenario(_require_file(args.scenario, "scenario file"))
    plan = load_plan(_require_file(args.plan, "plan file"), scenario)
    traj = sim.run(scenario, plan)
    report = sim.metrics(traj, plan)

    out_dir = scenario.output_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    traj_path = Path(args.traj) if args.traj else out_dir / f"{scenario.name}_trajectory.csv"
    metrics_path = Path(args.metrics) if args.metrics else out_dir / f"{scenario.name}_metrics.json"

    digest = sim.write_trajectory_csv(traj, traj_path)
    metrics_path.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")

    print(f"simulated {scenario.name}: {len(traj.times)} ticks x {len(traj.agent_ids)} agents")
    print(f"max tracking error: {report.max_tracking_error:.4f} m")
    print(f"final deviation from planned positions: {report.final_deviation:.4f} m")
    print(f"min pairwise planar distance: {report.min_pairwise_planar_distance:.3f} m"
          + (" (below safety threshold!)" if report.safety_flagged else ""))
    print(f"wrote {traj_path} (sha256 {digest[:16]}...) and {metrics_path}")
    return EXIT_OK


def cmd_render(args) -> int:
    scenario = load_scenario(_require_file(args.scenario, "scenario file"))
    times, agent_ids, positions, _ = sim.read_trajectory_csv(
        _require_file(args.trajectory, "trajectory file")
    )
    graph = build_graph(scenario.config)

    out_dir = Path(args.out_dir) if args.out_dir else scenario.output_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    for t in args.times:
        svg = render.render_frame(times, agent_ids, positions, scenario, graph, t)
        path = out_dir / f"{scenario.name}_frame_t{t:g}.svg"
        path.write_text(svg, encoding="utf-8")
        print(f"wrote {path}")
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario = load_scenario(_require_file(args.scenario, "scenario file"))
    from .formation import validate_dnn

    graph = build_graph(scenario.config)
    report = validate_dnn(graph, scenario.config)
    if not report.ok:
        for v in report.violations:
            print(f"violation: {v}", file=sys.stderr)
        return EXIT_DOMAIN
    missing = set(graph.boundary_ids) - set(scenario.boundary_targets)
    if missing:
        print(f"error: boundary targets missing for agents {sorted(missing)}", file=sys.stderr)
        return EXIT_DOMAIN
    print(f"{scenario.name}: OK (N={len(scenario.config.ids)}, M={graph.depth}, "
          f"{len(scenario.heat.applications)} applications)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aircover",
        description="Layered-graph coverage planning and quadcopter team simulation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="compute the coverage plan for a scenario")
    p.add_argument("scenario")
    p.add_argument("--out", help="plan JSON path (default: <output.dir>/<name>_plan.json)")
    p.set_defaults(fn=cmd_plan)

    p = sub.add_parser("simulate", help="run the team simulation for a plan")
    p.add_argument("scenario")
    p.add_argument("plan")
    p.add_argument("--traj", help="trajectory CSV path")
    p.add_argument("--metrics", help="metrics JSON path")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("render", help="render SVG snapshots from a trajectory")
    p.add_argument("trajectory")
    p.add_argument("scenario")
    p.add_argument("--times", type=float, nargs="*", default=[], help="snapshot times, s")
    p.add_argument("--out-dir", help="frame output directory")
    p.set_defaults(fn=cmd_render)

    p = sub.add_parser("validate", help="check a scenario file and its formation")
    p.add_argument("scenario")
    p.set_defaults(fn=cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except AirCoverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
