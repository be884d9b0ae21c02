"""Exception hierarchy shared across the package.

Two broad failure classes matter to callers (and to the CLI exit codes):
configuration/input problems and numerical breakdowns.
"""


class FlmgofError(Exception):
    """Base class for all package errors."""


class ConfigError(FlmgofError):
    """Invalid configuration, incompatible inputs, or infeasible options."""


class ParseError(ConfigError):
    """Malformed input file; message carries the offending line number."""


class NumericError(FlmgofError):
    """Numerical failure: singular designs, non-PSD covariances, non-finite data."""
