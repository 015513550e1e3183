"""Exception hierarchy.

Errors split into two families.  ``CertificationError`` covers numerical
results that could not be certified (truncation, root residuals, fits,
quadrature); the CLI maps these to exit status 2.  ``DomainError`` covers
requests that are mathematically outside an operation's domain.
"""


class CasimirLabError(Exception):
    """Base class for all package errors."""


class DomainError(CasimirLabError, ValueError):
    """Arguments are outside the domain of the operation."""


class UndeterminedCoefficientError(DomainError):
    """The requested coefficient is not fixed by the supplied data."""


class GammaPoleError(DomainError):
    """Gamma function evaluated at a nonpositive integer."""


class OutOfRangeError(DomainError):
    """Argument lies beyond the certified range of a spectrum."""


class CertificationError(CasimirLabError):
    """A numerical result failed its certificate."""


class TruncationError(CertificationError):
    """Tail bound of a truncated spectral sum exceeds the tolerance."""

    def __init__(self, message, achievable=None):
        super().__init__(message)
        self.achievable = achievable


class RootCertificationError(CertificationError):
    """A secular root failed its residual or bracket check."""

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class MissedRootError(CertificationError):
    """Root count disagrees with the Dirichlet interlacing bound."""


class NormalizationError(CertificationError):
    """Numerical eigenfunction normalization check failed."""


class InsufficientCeilingError(CertificationError):
    """A product factor is not certified high enough."""

    def __init__(self, message, required=None):
        super().__init__(message)
        self.required = required


class ConditioningError(CertificationError):
    """Least-squares basis is too ill-conditioned."""

    def __init__(self, message, condition=None, suggested_window=None):
        super().__init__(message)
        self.condition = condition
        self.suggested_window = suggested_window


class FitError(CertificationError):
    """A fit could not be carried out on the supplied data."""


class CrossValidationError(CertificationError):
    """Fitted coefficients disagree with their predicted values."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class QuadratureError(CertificationError):
    """Adaptive quadrature did not converge."""

    def __init__(self, message, k_range=None):
        super().__init__(message)
        self.k_range = k_range


class ConfigError(CasimirLabError):
    """Invalid run configuration (usage error)."""
