"""
Exception hierarchy shared by the simulation, analysis and optimisation packages.
"""


class StarRisError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(StarRisError, ValueError):
    """A scenario configuration is malformed or violates its invariants."""


class GeometryError(StarRisError, ValueError):
    """Node positions do not define a valid link (e.g. coincident endpoints)."""


class NonConvexProgramError(StarRisError, ValueError):
    """A constraint handed to the convex engine is not convex."""


class SubproblemInfeasible(StarRisError):
    """A convexified subproblem has no strictly feasible point."""

    def __init__(self, block, message=""):
        self.block = block
        super().__init__(f"{block} subproblem infeasible" + (f": {message}" if message else ""))


class DegenerateSlack(StarRisError):
    """A Taylor expansion point has a (near) zero slack variable."""

    def __init__(self, users):
        self.users = list(users)
        super().__init__(f"degenerate slack values for users {self.users}")


class InitializationInfeasible(StarRisError):
    """No transmit power above the floor satisfies the primary SINR constraint."""
