"""Exception types shared across the package.

The CLI maps these onto distinct exit codes, so library code should raise
the most specific one that applies.
"""


class DataError(ValueError):
    """Input data is malformed: missing column, non-numeric cell, value
    outside the declared range, empty dataset, etc."""


class DegenerateParameterError(ValueError):
    """A parameter combination makes the mechanism ill-defined, e.g. a
    quantization step larger than the domain or a non-positive log argument
    in an error-bound constant."""


class ConvergenceError(RuntimeError):
    """The hyperparameter fixed-point iteration failed to converge."""

    def __init__(self, message, trajectory=None):
        super().__init__(message)
        self.trajectory = trajectory or []
