"""Exception hierarchy shared across the package."""


class ThinspecError(Exception):
    """Base class for all package-specific errors."""


class DegenerateGeometryError(ThinspecError):
    """Polygon input is collinear, repeated, or otherwise not a convex body."""


class SolverError(ThinspecError):
    """An eigensolve or root-finding procedure failed to converge."""


class HypothesisDeviationError(ThinspecError):
    """Input lies outside the standing assumptions of a check.

    Carries a machine-readable ``flag`` so harness reports can record the
    refusal instead of treating it as a failure.
    """

    def __init__(self, flag: str, message: str = ""):
        self.flag = flag
        super().__init__(message or flag)
