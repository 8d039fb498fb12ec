"""Exception types shared across the package.

The CLI maps these onto process exit codes: configuration problems exit
with 2, stability violations with 3, and I/O failures with 4.
"""


class EdgeqError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(EdgeqError):
    """Invalid configuration, parameters, or input data."""


class InstabilityError(EdgeqError):
    """A queueing system was asked to operate at or beyond saturation."""


class NoPositiveRootError(EdgeqError):
    """A capacity balance equation has no positive real solution."""
