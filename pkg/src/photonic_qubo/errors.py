"""Exception types shared across the package."""


class DimensionMismatchError(ValueError):
    """Array lengths or matrix dimensions do not agree."""


class TopologyError(ValueError):
    """Requested mesh topology cannot be built or is inconsistent."""


class NotPositiveSemidefiniteError(ValueError):
    """Weight matrix has a negative eigenvalue beyond tolerance.

    Carries the offending eigenvalue in ``min_eigenvalue``.
    """

    def __init__(self, min_eigenvalue: float):
        self.min_eigenvalue = float(min_eigenvalue)
        super().__init__(
            f"weight matrix is not positive semi-definite "
            f"(min eigenvalue {self.min_eigenvalue:.6g})"
        )


class UnsupportedConfigurationError(ValueError):
    """Operation requires a calibration the current configuration lacks."""


class UndefinedMetricError(ValueError):
    """Metric is undefined for the given inputs (e.g. zero-norm vector)."""


class BudgetExceededError(ValueError):
    """Problem size exceeds the exhaustive-enumeration budget."""


class DegenerateProblemError(ValueError):
    """Problem has a zero minimum cost; tolerance thresholds are vacuous."""
