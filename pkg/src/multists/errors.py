"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, DataError -> 3,
TrainingError -> 4. ShapeError signals a programming-contract violation
(mismatched tensor dimensions) and is not expected to surface from a
well-formed run.
"""


class MultistsError(Exception):
    """Base class for all package errors."""


class ShapeError(MultistsError):
    """Tensor dimensions violate an operation's contract."""


class ConfigError(MultistsError):
    """Invalid or inconsistent run configuration."""


class DataError(MultistsError):
    """Malformed input data, corpus, vocabulary or checkpoint."""


class MetricError(DataError):
    """Inputs on which the requested metric is undefined."""


class TrainingError(MultistsError):
    """Numeric failure during optimization (NaN/Inf loss or gradient)."""
