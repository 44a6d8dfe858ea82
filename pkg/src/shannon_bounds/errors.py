"""Exception types shared across the package."""


class SourceError(ValueError):
    """Malformed or unsupported source description."""


class NumericalFailure(ArithmeticError):
    """A quadrature or iteration produced a non-finite or unusable result."""


class PreconditionError(ValueError):
    """Arguments lie outside the domain where a formula is stated."""


class InfeasibleDistortion(PreconditionError):
    """The requested distortion cannot be attained."""


class InvalidCertificate(ValueError):
    """A variational certificate violates its membership constraint."""
