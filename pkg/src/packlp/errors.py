"""Exception hierarchy shared by all modules."""


class PackLPError(Exception):
    """Base class for all library errors."""


class DomainError(PackLPError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ParameterPole(DomainError):
    """Hypergeometric lower parameter is a non-positive integer."""


class AccuracyLoss(PackLPError, ArithmeticError):
    """An internal error estimate exceeded the requested tolerance."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class IntegrationFailure(PackLPError, ArithmeticError):
    """Adaptive quadrature could not reach its tolerance."""

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class DifferentiationInstability(PackLPError, ArithmeticError):
    """Finite-difference step control failed to converge."""


class EnvelopeViolation(PackLPError, ValueError):
    """A declared decay envelope does not bound the function."""


class SpectrumMismatch(PackLPError, ValueError):
    """A spectral point does not belong to the geometry's spectrum."""


class GridError(PackLPError, ValueError):
    """A discretization grid does not cover the required region."""


class DegenerateWitness(PackLPError, ValueError):
    """The candidate has a non-positive trivial transform."""


class CertificationFailure(PackLPError):
    """A witness failed its a posteriori checks."""

    def __init__(self, message, certificate=None):
        super().__init__(message)
        self.certificate = certificate


class BudgetExhausted(PackLPError):
    """The LP/certify loop ran out of rounds without a certificate."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DimensionTooLarge(PackLPError, ValueError):
    """Exhaustive lattice enumeration was requested above its dimension cap."""


class TailBoundFailure(PackLPError, ArithmeticError):
    """A truncated lattice sum could not be certified by its envelope."""
