"""Exception hierarchy.

Each category maps to a CLI exit code (see :mod:`brdd.cli`).
"""


class RDError(Exception):
    """Base class for all package errors."""


class ConfigError(RDError, ValueError):
    """Invalid run or DGP configuration."""


class DataError(RDError, ValueError):
    """Input data cannot be validated."""


class EmptyDatasetError(DataError):
    pass


class EstimationError(RDError):
    """An estimator could not produce a result."""


class InsufficientDataError(EstimationError):
    def __init__(self, message, side=None, count=None):
        super().__init__(message)
        self.side = side
        self.count = count


class SingularFitError(EstimationError):
    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class WeakFirstStageError(EstimationError):
    def __init__(self, message, first_stage=None):
        super().__init__(message)
        self.first_stage = first_stage
