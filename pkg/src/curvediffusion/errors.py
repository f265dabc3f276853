"""Error taxonomy shared by all modules.

Distinguishable failure kinds, coarsest split first: bad input versus bad
state versus the one expected signal (blow-up) that is not a failure at all
but the detector for finite-time singularities.
"""


class CurveDiffusionError(Exception):
    """Base class for everything raised on purpose by this package."""


class RejectedInputError(CurveDiffusionError, ValueError):
    """Arguments violate a documented precondition (wrong count, sign, enum)."""


class DegenerateGeometryError(CurveDiffusionError, ValueError):
    """Curve too degenerate to operate on (collapsed length, non-integer turning)."""


class NonUniformParametrizationError(CurveDiffusionError, ValueError):
    """Caller contract: the operation needs a uniform-in-arclength curve.

    Resample with ``resample_uniform`` first.
    """


class SolverError(CurveDiffusionError, RuntimeError):
    """Linear solve failed or produced a residual above the configured tolerance."""


class BlowUpSignal(CurveDiffusionError, RuntimeError):
    """Curvature or mesh degeneration consistent with finite-time blow-up.

    Carries the last state that still satisfied all invariants, so callers
    can keep the partial trajectory. The run loop treats this as an expected
    branch, not an error.
    """

    def __init__(self, message: str, last_state=None, reason: str = "blow-up"):
        super().__init__(message)
        self.last_state = last_state
        self.reason = reason
