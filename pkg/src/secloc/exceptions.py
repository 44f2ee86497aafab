"""Exception types shared across the package."""


class SecLocError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(SecLocError, ValueError):
    """An argument is outside the mathematical domain of an operation."""


class ConfigError(SecLocError):
    """An experiment configuration or attack specification is invalid."""


class InsufficientAnchorsError(SecLocError):
    """Fewer than three anchors were supplied to a position solver."""


class DegenerateGeometryError(SecLocError):
    """Anchor geometry is (numerically) collinear; the system is rank deficient."""


class InsufficientSurvivorsError(SecLocError):
    """An elimination step left fewer than three anchors to localize with."""


class DegenerateInformationError(SecLocError):
    """A Fisher information matrix is singular; no finite error bound exists."""
