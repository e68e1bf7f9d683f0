"""Exception hierarchy shared across the package.

Configuration-class errors map to CLI exit code 2, numerical-class errors
to exit code 3.
"""


class TorscatError(Exception):
    """Base class for all package errors."""


class ConfigError(TorscatError, ValueError):
    """Invalid parameter, limit, or run configuration."""


class RangeError(ConfigError):
    """Query outside the table or argument range."""


class DomainError(ConfigError):
    """Argument outside the mathematical domain (e.g. m not a sum of two squares)."""


class NumericalError(TorscatError, ArithmeticError):
    """Base class for runtime numerical failures."""


class PoleProximityError(NumericalError):
    """Spectral parameter too close to a Laplace eigenvalue."""


class SolverError(NumericalError):
    """Root bracketing or refinement failed."""


class SingularityError(NumericalError):
    """Evaluation requested at the scatterer position."""


class CacheError(TorscatError, IOError):
    """Sieve cache file is malformed, truncated, or version-incompatible."""
