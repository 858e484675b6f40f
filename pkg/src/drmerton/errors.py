"""Exception hierarchy shared across the library.

The CLI maps these onto process exit codes: configuration problems exit
with 2, data problems (missing files, malformed CSV, insufficient
history) with 3, and numeric failures (non-finite values, solver
breakdown, degenerate calibration) with 4.
"""

from __future__ import annotations


class DrmertonError(Exception):
    """Base class for all library errors."""


class ConfigError(DrmertonError):
    """Invalid configuration: schema violations, unknown keys, bad values."""


class DataError(DrmertonError):
    """Invalid or insufficient input data (prices, priors, files)."""


class InsufficientHistoryError(DataError):
    """Not enough price history for the requested windows.

    Carries the number of required and available steps.
    """

    def __init__(self, required: int, available: int, what: str = "steps"):
        self.required = required
        self.available = available
        super().__init__(
            f"insufficient history: need {required} {what}, have {available}"
        )


class NumericError(DrmertonError):
    """Numeric failure: non-finite intermediate, solver breakdown."""


class EvaluationError(NumericError):
    """An integrand evaluated to a non-finite value at a quadrature node."""


class DegenerateGradientError(NumericError):
    """Radius calibration hit a zero gradient-norm denominator."""


class InfeasibleTargetError(NumericError):
    """The robust mean-variance return target is unattainable.

    Carries the maximum achievable robust return.
    """

    def __init__(self, target: float, max_achievable: float):
        self.target = target
        self.max_achievable = max_achievable
        super().__init__(
            f"return target {target:g} infeasible; maximum achievable robust "
            f"return is {max_achievable:g}"
        )
