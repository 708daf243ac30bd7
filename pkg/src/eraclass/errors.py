"""Exception types shared across the pipeline.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
NumericError -> 4.
"""


class EraclassError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(EraclassError):
    """Invalid or inconsistent configuration."""


class DataError(EraclassError):
    """Unreadable, malformed, or infeasible input data."""


class NumericError(EraclassError):
    """Numeric failure during training (NaN/Inf loss or weights)."""
