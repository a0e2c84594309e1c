"""Exception hierarchy.

Every error raised on purpose by the library derives from ``CTError`` so the
CLI can map it to exit code 2 (bad input) or 1 (numerical check failed).
"""


class CTError(Exception):
    """Base class for library errors."""

    exit_code = 2


class DomainError(CTError, ValueError):
    """Argument outside the domain of the operation (e.g. r <= 0)."""


# density hypotheses

class HypothesisViolation(CTError, ValueError):
    """A density function fails one of the structural hypotheses."""


class NonPositiveDensity(HypothesisViolation):
    pass


class DecreasingDensity(HypothesisViolation):
    pass


class NoPositiveRho(HypothesisViolation):
    pass


class NonMonotoneLogDerivative(HypothesisViolation):
    pass


# spectral solver

class SeriesDivergence(CTError, ArithmeticError):
    pass


class StiffnessFailure(CTError, ArithmeticError):
    exit_code = 1


class ZeroLambda(DomainError):
    pass


class MatchRadiusTooSmall(DomainError):
    pass


class WronskianDegenerate(CTError, ArithmeticError):
    exit_code = 1


class NotInLowerHalfPlane(DomainError):
    pass


# transforms

class UnboundedSupport(DomainError):
    pass


class InconsistentCalibration(CTError, ArithmeticError):
    exit_code = 1


class TailTooFat(CTError, ArithmeticError):
    exit_code = 1


class QuadratureFailure(CTError, ArithmeticError):
    exit_code = 1


class QuadratureBudgetExceeded(QuadratureFailure):
    pass


# geometry

class InvalidPoint(DomainError):
    pass


class CoincidentDirections(DomainError):
    pass
