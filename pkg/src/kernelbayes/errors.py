"""Exception taxonomy shared across the package.

Input validation failures raise InputError; numerical failures that survive
the jitter retry raise NumericError or one of its subclasses. Filtering wraps
per-step failures in FilterStepError so callers know which step died.
"""


class KernelBayesError(Exception):
    """Base class for all package errors."""


class InputError(KernelBayesError, ValueError):
    """Malformed or inconsistent inputs (shapes, kernels, preconditions)."""


class NumericError(KernelBayesError, ArithmeticError):
    """A linear solve or downstream computation failed numerically."""


class DegenerateBeliefError(NumericError):
    """Every thresholded weight is zero; the belief carries no support."""


class DecodeDegenerateError(NumericError):
    """Mean-shift denominator underflowed; no usable density mass at the iterate."""


class FilterStepError(KernelBayesError):
    """A filtering step failed. Carries the 1-based step index and algorithm."""

    def __init__(self, step: int, algorithm: str, message: str):
        self.step = step
        self.algorithm = algorithm
        super().__init__(f"step {step} ({algorithm}): {message}")
