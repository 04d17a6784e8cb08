"""Exception and warning types shared across the package."""


class KplapError(Exception):
    """Base class for every error this package raises on purpose."""


class GeometryError(KplapError):
    """Radii or space dimension inconsistent with the requested geometry."""


class BalanceError(KplapError):
    """A density does not carry the mass the construction requires."""


class DomainError(KplapError, ValueError):
    """Scalar argument outside the domain of a pointwise map."""


class NumericError(KplapError):
    """Quadrature or evaluation produced a non-finite value."""


class BracketError(KplapError):
    """Root bracket endpoints do not straddle a sign change."""


class ConvergenceError(KplapError):
    """An iterative solver exhausted its iteration budget."""


class UsageError(KplapError):
    """Operation invoked with structurally mismatched arguments."""


class ConfigError(KplapError):
    """Run configuration is malformed, unknown, or inconsistent."""


class AdmissibilityWarning(UserWarning):
    """Gradient bound or multiplier range exceeded; results are diagnostic only."""


class MonotonicityWarning(UserWarning):
    """A profile expected to be strictly monotone is locally flat."""
