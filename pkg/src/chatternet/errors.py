"""Exception types shared across the package.

The CLI maps these onto exit codes: usage/configuration problems exit 2,
data problems exit 3, numerical failures exit 4.
"""


class ConfigurationError(ValueError):
    """An invalid or inconsistent configuration value."""


class DataError(RuntimeError):
    """Input data is unreadable, malformed beyond tolerance, or empty."""


class NumericalError(RuntimeError):
    """A numerical failure (NaN/inf loss, divergent training) was detected."""
