#!/usr/bin/env python3
"""Generate the bundled scenario fixtures (desk16 and fig5) deterministically.

Both formations use a strictly convex boundary ring (every ring point is a
hull vertex) with interior agents kept well inside, so every follower admits
an enclosing communication simplex.  Each generated scenario is validated by
running the full planning pipeline before it is written.
"""

import sys
from pathlib import Path

import numpy as np
import yaml

REPO = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(REPO / "src"))

from aircover import planner
from aircover.formation import validate_dnn
from aircover.scenario import parse_scenario

OUT_DIR = REPO / "scenarios"


def superellipse(n, a, b, power=2.5, phase=0.0, center=(0.0, 0.0)):
    """n points on |x/a|^p + |y/b|^p = 1; strictly convex for p > 1."""
    th = phase + np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    c, s = np.cos(th), np.sin(th)
    x = a * np.sign(c) * np.abs(c) ** (2.0 / power)
    y = b * np.sign(s) * np.abs(s) ** (2.0 / power)
    return np.stack([x, y], axis=1) + np.asarray(center)


def desk16():
    # odd boundary count: no antipodal pair is collinear with the ring mean,
    # so no desired-position simplex can collapse
    rng = np.random.default_rng(160)
    boundary = superellipse(7, 12.0, 9.0, power=2.2, phase=0.25)
    interior = np.array(
        [
            [0.4, 0.3],  # core candidate near the centroid
            [-5.1, -2.2],
            [4.7, -3.1],
            [6.3, 2.9],
            [-3.8, 3.6],
            [0.9, -4.8],
            [-6.2, 0.7],
            [2.2, 5.1],
            [-1.7, -1.9],
        ]
    )
    interior += rng.uniform(-0.05, 0.05, interior.shape)  # break symmetries
    agents = np.vstack([boundary, interior]).round(6)

    targets = superellipse(7, 10.0, 7.5, power=2.2, phase=0.45, center=(20.0, 6.0)).round(6)
    scenario = {
        "name": "desk16",
        "agents": [
            {"id": k + 1, "pos": [float(x), float(y)]} for k, (x, y) in enumerate(agents)
        ],
        "applications": [
            {
                "alpha": 0.55,
                "targets": [
                    {"pos": [23.0, 9.0], "cov": [[2.0, 0.3], [0.3, 1.2]]},
                    {"pos": [18.5, 9.5], "cov": [[1.1, 0.0], [0.0, 1.6]]},
                ],
                "zone": [[15.5, 6.0], [26.0, 6.0], [26.0, 12.5], [15.5, 12.5]],
            },
            {
                "alpha": 0.45,
                "targets": [{"pos": [19.0, 1.5], "cov": [[1.8, -0.2], [-0.2, 0.9]]}],
                "zone": [[15.0, -2.0], [24.0, -2.0], [19.5, 5.0]],
            },
        ],
        "boundary_targets": [
            {"id": k + 1, "pos": [float(x), float(y)]} for k, (x, y) in enumerate(targets)
        ],
        "vehicle": {
            "mass": 1.2,
            "poles_translational": [-2.0, -2.5, -3.0, -3.5],
            "poles_yaw": [-3.0, -4.0],
        },
        "schedule": {"t0": 0.0, "tf": 60.0, "t_end": 120.0, "dt": 0.02},
        "altitude": {"base": 10.0, "step": 1.0},
        "output": {"dir": "out/desk16", "frame_times": [15.0, 35.0, 80.0]},
    }
    return scenario


def fig5():
    rng = np.random.default_rng(1650)
    boundary = superellipse(41, 30.0, 20.0, power=2.5, phase=0.03)

    rings = []
    specs = [
        (0.85, 31, 0.11),
        (0.70, 27, 0.23),
        (0.55, 22, 0.37),
        (0.40, 17, 0.51),
        (0.25, 12, 0.67),
        (0.13, 8, 0.83),
    ]
    for scale, count, phase in specs:
        ring = superellipse(count, 30.0 * scale, 20.0 * scale, power=2.5, phase=phase)
        ring += rng.uniform(-0.25, 0.25, ring.shape)
        rings.append(ring)
    cluster = np.array(
        [[1.3, 0.9], [-1.6, 1.1], [-1.1, -1.4], [1.7, -0.8], [0.2, 1.9], [-0.4, -2.1]]
    )
    cluster += rng.uniform(-0.1, 0.1, cluster.shape)
    core = np.array([[0.21, -0.13]])
    agents = np.vstack([boundary] + rings + [cluster, core]).round(6)
    assert agents.shape == (165, 2), agents.shape

    targets = superellipse(41, 27.0, 17.5, power=2.5, phase=0.08, center=(24.0, 10.0)).round(6)

    # three applications: rectangular grid zone, triangular zone, small rectangle
    rect_pts = [
        {"pos": [float(x), float(y)], "cov": [[2.6, 0.2], [0.2, 1.8]]}
        for x in (32.0, 38.5, 45.0)
        for y in (14.0, 20.0)
    ]
    tri_pts = [
        {"pos": [10.0, 19.0], "cov": [[2.2, -0.3], [-0.3, 1.5]]},
        {"pos": [16.0, 22.0], "cov": [[1.6, 0.0], [0.0, 1.6]]},
        {"pos": [13.0, 15.5], "cov": [[1.9, 0.4], [0.4, 1.3]]},
    ]
    small_rect_pts = [
        {"pos": [18.0, -1.0], "cov": [[2.4, 0.0], [0.0, 1.2]]},
        {"pos": [25.0, 0.5], "cov": [[1.7, 0.3], [0.3, 1.4]]},
    ]
    scenario = {
        "name": "fig5",
        "agents": [
            {"id": k + 1, "pos": [float(x), float(y)]} for k, (x, y) in enumerate(agents)
        ],
        "applications": [
            {
                "alpha": 0.4,
                "targets": rect_pts,
                "zone": [[29.0, 10.5], [48.0, 10.5], [48.0, 23.5], [29.0, 23.5]],
            },
            {
                "alpha": 0.35,
                "targets": tri_pts,
                "zone": [[6.5, 13.0], [20.0, 13.0], [14.5, 25.0]],
            },
            {
                "alpha": 0.25,
                "targets": small_rect_pts,
                "zone": [[14.0, -4.0], [29.0, -4.0], [29.0, 3.5], [14.0, 3.5]],
            },
        ],
        "boundary_targets": [
            {"id": k + 1, "pos": [float(x), float(y)]} for k, (x, y) in enumerate(targets)
        ],
        "vehicle": {
            "mass": 1.2,
            "poles_translational": [-2.0, -2.5, -3.0, -3.5],
            "poles_yaw": [-3.0, -4.0],
        },
        "schedule": {"t0": 0.0, "tf": 60.0, "t_end": 120.0, "dt": 0.02},
        "altitude": {"base": 10.0, "step": 1.0},
        "output": {"dir": "out/fig5", "frame_times": [15.0, 35.0, 80.0]},
    }
    return scenario


def check(raw):
    sc = parse_scenario(raw)
    result = planner.plan(
        sc.config, sc.heat, sc.boundary_targets, sc.schedule.t0, sc.schedule.tf
    )
    report = validate_dnn(result.graph, sc.config)
    assert report.ok, report.violations
    for i in result.graph.follower_ids:
        assert result.schedule.initial[i].values.min() > 0.0
        assert result.schedule.final[i].values.min() >= 0.0
    sizes = [len(layer) for layer in result.graph.layers]
    print(f"  {raw['name']}: N={len(sc.config.ids)}, layer sizes {sizes}, "
          f"core {result.graph.core_id}")


def main():
    OUT_DIR.mkdir(exist_ok=True)
    for builder in (desk16, fig5):
        raw = builder()
        print(f"validating {raw['name']} ...")
        check(raw)
        path = OUT_DIR / f"{raw['name']}.yaml"
        with open(path, "w", encoding="utf-8") as fh:
            yaml.safe_dump(raw, fh, sort_keys=False, default_flow_style=None, width=100)
        print(f"  wrote {path}")


if __name__ == "__main__":
    main()
