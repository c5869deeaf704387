"""Exception types shared across the package."""


class AirCoverError(Exception):
    """Base class for all domain errors raised by this package."""


class DegenerateHullError(AirCoverError):
    """The point set has no two-dimensional convex hull (collinear or too few points)."""


class BoundaryMismatchError(AirCoverError):
    """An explicitly supplied boundary id list does not match the hull vertex set."""


class NoInteriorAgentError(AirCoverError):
    """A core leader was requested but every agent sits on the hull."""


class InfeasibleFormationError(AirCoverError):
    """Some followers admit no enclosing communication simplex."""

    def __init__(self, message, offending_ids=()):
        super().__init__(message)
        self.offending_ids = tuple(offending_ids)


class SingularSimplexError(AirCoverError):
    """A communication simplex is degenerate (zero signed area)."""


class CovarianceError(AirCoverError):
    """A heat-map covariance matrix is not symmetric positive definite."""


class DegenerateRegionError(AirCoverError):
    """An integration polygon is degenerate or not convex/CCW."""


class DegenerateTargetError(AirCoverError):
    """Boundary target positions do not form a usable convex polygon."""


class SingularityError(AirCoverError):
    """The feedback-linearization map is (near-)singular at the current state."""


class DivergenceError(AirCoverError):
    """A simulated vehicle left the sane numeric envelope."""

    def __init__(self, message, agent_id=None, time=None):
        super().__init__(message)
        self.agent_id = agent_id
        self.time = time


class CoordinationError(AirCoverError):
    """A follower is missing a neighbor measurement it needs."""


class ScenarioError(AirCoverError):
    """A scenario file failed to parse or validate."""


class StalePlanError(AirCoverError):
    """A plan artifact does not match the scenario it is applied to."""


class TrajectoryRangeError(AirCoverError):
    """A requested time lies outside the trajectory log."""
