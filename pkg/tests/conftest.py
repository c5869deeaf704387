import sys
from pathlib import Path

import numpy as np
import pytest

TESTS_DIR = Path(__file__).resolve().parent
REPO_ROOT = TESTS_DIR.parent
sys.path.insert(0, str(TESTS_DIR))  # make oracles importable as a plain module


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def scenario_dir(repo_root) -> Path:
    return repo_root / "scenarios"


@pytest.fixture(scope="session")
def warm_kernels():
    """Compile the numba kernels once so timed tests measure steady state."""
    from aircover import _kernels, quadcopter as qc

    pts = np.zeros((4, 2))
    _kernels.heat_eval(pts, np.zeros((1, 2)), np.eye(2)[None], np.ones(1))
    s0 = qc.hover_state([0.0, 0.0, 10.0])[None, :]
    _kernels.sim_loop(
        s0,
        np.ones(1, dtype=np.int8),
        np.zeros((1, 2)),
        np.zeros((1, 2)),
        np.full(1, 10.0),
        np.zeros((1, 3), dtype=np.int64),
        np.zeros((1, 3)),
        np.zeros((1, 3)),
        0.0,
        1.0,
        0.01,
        3,
        qc.design_gains().K,
        qc.DEFAULT_MASS,
    )
    return _kernels.active_backend()


def small_plan_inputs():
    """Shared 8-agent fixture: pentagon boundary, core, two followers."""
    from aircover import formation, heatmap

    config = formation.ReferenceConfiguration.from_agents(
        [
            (1, (0.0, 0.0)),
            (2, (10.0, -1.0)),
            (3, (13.0, 6.0)),
            (4, (6.0, 11.0)),
            (5, (-2.0, 7.0)),
            (6, (5.0, 4.5)),
            (7, (3.0, 3.0)),
            (8, (8.0, 5.0)),
        ]
    )
    heat = heatmap.HeatMap(
        (
            heatmap.Application(
                1, (heatmap.GaussianTarget([18.0, 5.0], [[1.5, 0.2], [0.2, 0.8]]),), 0.6
            ),
            heatmap.Application(
                2, (heatmap.GaussianTarget([14.0, -2.0], [[0.6, 0.0], [0.0, 0.6]]),), 0.4
            ),
        )
    )
    boundary_targets = {
        1: np.array([8.0, -2.0]),
        2: np.array([18.0, -3.0]),
        3: np.array([21.0, 4.0]),
        4: np.array([14.0, 9.0]),
        5: np.array([6.0, 5.0]),
    }
    return config, heat, boundary_targets


@pytest.fixture(scope="session")
def small_plan():
    from aircover import planner

    config, heat, targets = small_plan_inputs()
    return config, heat, targets, planner.plan(config, heat, targets, 0.0, 20.0)
