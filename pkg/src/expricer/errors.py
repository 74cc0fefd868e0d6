"""Exception hierarchy shared across the library.

Input problems (bad parameters, misaligned grids) and numerical failures
(ODE blow-up, quadrature that cannot reach tolerance) are kept on separate
branches so callers — the CLI in particular — can map them to distinct
exit codes.
"""


class PricerError(Exception):
    """Base class for all library errors."""


class ParameterError(PricerError):
    """A model parameter violates its admissibility constraints."""


class DomainError(PricerError):
    """An evaluation point lies outside the valid domain."""


class AlignmentError(PricerError):
    """A required event time does not fall on the discretization grid."""


class GridError(PricerError):
    """A strike or time grid violates its structural requirements."""


class NumericalError(PricerError):
    """Base class for runtime numerical failures."""


class DivergenceError(NumericalError):
    """An ODE solution blew up; the message names the time of failure."""


class ToleranceError(NumericalError):
    """A quadrature or iteration stopped before reaching tolerance.

    Carries the best estimate achieved so callers can decide whether the
    partial result is still usable.
    """

    def __init__(self, message, estimate=None, achieved_tol=None):
        super().__init__(message)
        self.estimate = estimate
        self.achieved_tol = achieved_tol


class InversionError(NumericalError):
    """A price lies outside the attainable range of the map being inverted."""


class InstabilityError(NumericalError):
    """A recursion became numerically unstable (near-zero pivot)."""
