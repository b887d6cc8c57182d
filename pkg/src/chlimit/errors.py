"""Exception types raised across the package.

Every error derives from :class:`ChlimitError` so callers can catch the whole
family at once. The harness maps :class:`NumericalFailure` subclasses to exit
code 3 and :class:`CheckFailed` to exit code 1.
"""


class ChlimitError(Exception):
    """Base class for all package errors."""


class NumericalFailure(ChlimitError):
    """A numerical routine could not produce a trustworthy result."""


class InvalidInput(ChlimitError, ValueError):
    """Arguments violate a documented precondition."""


class NonConvergence(NumericalFailure):
    pass


class GridTooNarrow(NumericalFailure):
    pass


class GridMismatch(InvalidInput):
    pass


class SolvabilityViolated(NumericalFailure):
    def __init__(self, message, residual=None, where=None):
        super().__init__(message)
        self.residual = residual
        self.where = where


class Singular(NumericalFailure):
    pass


class OutsideChart(InvalidInput):
    pass


class ProjectionDiverged(NumericalFailure):
    pass


class DegenerateRadius(InvalidInput):
    pass


class InterfaceCollapse(NumericalFailure):
    pass


class CheckFailed(ChlimitError):
    def __init__(self, message, worst=None):
        super().__init__(message)
        self.worst = worst


class ChartMismatch(InvalidInput):
    pass


class ResolutionTooCoarse(InvalidInput):
    pass


class StepFailed(NumericalFailure):
    pass


class NoInterface(NumericalFailure):
    pass


class MultipleInterfaces(NumericalFailure):
    pass


class StencilOutOfDomain(InvalidInput):
    pass


class DegenerateFit(InvalidInput):
    pass


class SeparationViolated(InvalidInput):
    """The tubular chart is too wide for the distance to the outer boundary."""
