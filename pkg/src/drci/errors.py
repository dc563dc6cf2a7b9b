"""Exception hierarchy for the drci package.

Input problems (bad data, bad options) and numerical failures are kept
distinct so callers -- in particular the CLI -- can map them to different
exit codes.
"""


class DrciError(Exception):
    """Base class for all drci errors."""


class DataError(DrciError, ValueError):
    """Malformed or invalid input data (wrong shape, NaN, non-positive series)."""


class ConfigurationError(DrciError, ValueError):
    """Invalid options: bad grid degrees, empty candidate list, reps < 1, ..."""


class EstimationError(DrciError):
    """Numerical failure while fitting or evaluating the test."""


class CollinearBasisError(EstimationError):
    """Normal-equation matrix is singular or numerically rank deficient."""


class DegenerateStatisticError(EstimationError):
    """Variance estimate is zero; the standardized statistic is undefined."""


class GenerationError(EstimationError):
    """A simulated recursion produced a non-finite value."""
