"""Layered-graph aerial coverage: planning, weights, and team simulation."""

__version__ = "0.1.0"

from . import errors, formation, geometry, heatmap, planner, quadcopter, scenario, sim, weights  # noqa: F401
from .formation import LayeredGraph, ReferenceConfiguration, build_graph  # noqa: F401
from .heatmap import Application, GaussianTarget, HeatMap  # noqa: F401
from .planner import Plan, plan  # noqa: F401
from .scenario import Scenario, load_scenario  # noqa: F401
from .sim import Trajectory, metrics, run  # noqa: F401
