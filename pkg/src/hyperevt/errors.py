"""Exception hierarchy shared by all modules.

Each subclass carries the process exit code used by the command line
interface (0 success, 2 configuration, 3 data, 4 numerical/inconclusive).
"""


class HyperevtError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(HyperevtError):
    """Invalid configuration, parameters out of range, malformed config file."""

    exit_code = 2


class UnsupportedSystemError(ConfigError):
    """System outside the supported class (non-hyperbolic matrix, negative
    eigenvalues, billiard segment aligned with a cone, ...)."""


class DataError(HyperevtError):
    """Input data unusable: series too short, degenerate sample, bad file."""

    exit_code = 3


class InsufficientExceedancesError(DataError):
    """Fewer threshold exceedances than the estimator requires."""


class NumericalError(HyperevtError):
    """Numerical failure or an inconclusive computation."""

    exit_code = 4


class RangeError(NumericalError):
    """Requested value outside the safely computable range (e.g. period cap)."""


class InfiniteHorizonError(NumericalError):
    """Billiard flight exceeded the configured bound: the table appears to
    have an open corridor."""


class FitError(NumericalError):
    """Distribution fit failed (degenerate input)."""


class InsufficientSamplesError(NumericalError):
    """A Monte-Carlo probe could not accumulate the requested sample count."""
