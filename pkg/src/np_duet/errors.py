"""Exception hierarchy.

Validation-type errors (bad input, bad configuration) derive from
``ValidationError``; errors that arise from numerics (resonance, truncation,
quadrature accuracy) derive from ``NumericalError``.  The CLI maps the two
families to exit codes 1 and 2.
"""


class NPDuetError(Exception):
    """Base class for every error raised by the package."""


class ValidationError(NPDuetError, ValueError):
    pass


class NumericalError(NPDuetError, ArithmeticError):
    pass


class DomainError(ValidationError):
    """An argument lies outside the domain of the operation."""


class PoleError(DomainError):
    """Evaluation requested at a pole of a rational map."""


class GeometryError(ValidationError):
    """Inconsistent or unsupported geometric configuration."""


class ConfigurationError(ValidationError):
    pass


class DegenerateContrastError(DomainError):
    """Conductivity equal to the background value (k = 1)."""


class CompatibilityError(NumericalError):
    """Boundary data violate a zero-mean compatibility condition."""


class ResonanceError(NumericalError):
    """A mode denominator 4*lambda1*lambda2 - rho**(2n) is (nearly) zero."""

    def __init__(self, msg="plasmonic regime unsupported"):
        super().__init__(msg)


class TruncationError(NumericalError):
    """A truncated series failed its tail check."""

    def __init__(self, msg, suggested_n=None):
        super().__init__(msg)
        self.suggested_n = suggested_n


class AccuracyError(NumericalError):
    """A quadrature could not reach the requested accuracy."""


class EvaluationError(NumericalError):
    """A field evaluation was requested too close to a singular point."""
