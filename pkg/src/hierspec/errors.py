"""Exception types shared across the package."""


class DomainError(ValueError):
    """A precondition on the inputs is violated (bad parameter range,
    size cap exceeded, evaluation point outside the allowed region)."""


class SpectrumProximityError(DomainError):
    """The requested spectral parameter sits on or numerically too close
    to the operator spectrum."""


class DivergentIntegralError(DomainError):
    """The requested integral/series diverges for these parameters.

    Raised instead of silently returning infinity so that callers can
    distinguish "diverges" from "overflowed".
    """


class CertificationError(RuntimeError):
    """A series or quadrature could not be evaluated to the requested
    certified accuracy within its budget, or an iterative solver failed
    to converge."""
