"""Exception hierarchy shared by all modules."""


class FoldedWienerError(Exception):
    """Base class for every error raised by this package."""


class DomainError(FoldedWienerError, ValueError):
    """An argument lies outside the domain of the operation."""


class DimensionMismatchError(FoldedWienerError, ValueError):
    """Point, coefficient or spec dimensions disagree."""


class CapExceededError(FoldedWienerError, OverflowError):
    """A requested object would exceed a configured size cap."""


class NumericalError(FoldedWienerError, ArithmeticError):
    """Base class for failures of a numerical procedure."""


class FactorizationError(NumericalError):
    """Cholesky factorization failed even at the largest jitter."""


class NonConvergenceError(NumericalError):
    """Two quadrature resolutions disagree beyond tolerance."""


class InsufficientSpectrumError(NumericalError):
    """The spectrum cannot supply the requested tail sum."""


class NegativeTailError(NumericalError):
    """An eigenvalue tail sum came out nonpositive."""


class InsufficientSpanError(FoldedWienerError, ValueError):
    """Too few rows, or too narrow a range of n, to fit a rate."""


class EpsilonUnreachableError(FoldedWienerError, ValueError):
    """The requested error level is below what the curve achieves."""


class ConfigError(FoldedWienerError, ValueError):
    """A configuration file or flag is malformed."""


class DiscretizationError(NumericalError):
    """The discretized eigenproblem could not be solved."""
