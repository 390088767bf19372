"""Exception taxonomy shared across the package."""


class MpdpError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(MpdpError, ValueError):
    """Invalid or inconsistent parameters (sharing, engine, CLI config)."""


class DomainError(MpdpError, ValueError):
    """Mathematically invalid operand (inverse of zero, sqrt of negative, ...)."""


class InsufficientShares(MpdpError, ValueError):
    """Fewer shares supplied than the threshold requires."""


class IntegrityError(MpdpError, RuntimeError):
    """Redundant shares disagree, or a trusted-gate consistency check failed."""


class BracketError(MpdpError, RuntimeError):
    """Root bracketing failed: the target is not straddled by the interval."""


class NumericalError(MpdpError, RuntimeError):
    """An iterative numerical routine failed to converge."""


class Inconclusive(MpdpError, RuntimeError):
    """A statistical test could not decide (e.g. degenerate samples)."""
