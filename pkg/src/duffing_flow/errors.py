"""Exception hierarchy.

Every error raised by the package derives from :class:`DuffingFlowError`, and
the class name doubles as the machine-readable error code emitted by the
command-line front end.
"""


class DuffingFlowError(Exception):
    """Base class for all package errors."""

    @property
    def code(self) -> str:
        return type(self).__name__


# spectral_core
class NonIncreasingSpectrum(DuffingFlowError, ValueError):
    pass


class NonPositiveEigenvalue(DuffingFlowError, ValueError):
    pass


class TooFewModes(DuffingFlowError, ValueError):
    pass


class LambdaOutOfGap(DuffingFlowError, ValueError):
    pass


class DimensionMismatch(DuffingFlowError, ValueError):
    pass


# dynamics
class StepTooLargeForStiffness(DuffingFlowError, ValueError):
    pass


class NonFiniteState(DuffingFlowError, ArithmeticError):
    pass


class ForcingDomainError(DuffingFlowError, ValueError):
    """Sampled forcing evaluated outside its sample range."""


# energy_ledger
class NonUniformGrid(DuffingFlowError, ValueError):
    pass


class WellAssumptionViolated(DuffingFlowError, ValueError):
    pass


# asymptotics
class EmptySeries(DuffingFlowError, ValueError):
    pass


class InfeasibleBeta(DuffingFlowError, ValueError):
    pass


class HorizonTooShort(DuffingFlowError, ValueError):
    pass


class GridMismatch(DuffingFlowError, ValueError):
    pass


class UnboundedSolution(DuffingFlowError, ArithmeticError):
    pass


class NonCoerciveB(DuffingFlowError, ValueError):
    pass


# special_solutions
class NonContraction(DuffingFlowError, ArithmeticError):
    pass


class MaxIterExceeded(DuffingFlowError, RuntimeError):
    pass


class ZeroStiffnessMode(DuffingFlowError, ValueError):
    pass


class NonNegativeMu(DuffingFlowError, ValueError):
    pass


class WindowTooShort(DuffingFlowError, ValueError):
    pass


# basin_explorer
class EndpointsSameBasin(DuffingFlowError, ValueError):
    pass


class UncertifiedBasePoint(DuffingFlowError, ValueError):
    pass


# cli
class ConfigParseError(DuffingFlowError, ValueError):
    pass
