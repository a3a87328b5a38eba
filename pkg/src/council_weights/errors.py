class CouncilWeightsError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(CouncilWeightsError, ValueError):
    pass


class ConstraintViolation(ValidationError):
    """A family parameter leaves the admissible set; the message names the inequality."""

    def __init__(self, inequality: str):
        super().__init__(f"constraint violated: {inequality}")
        self.inequality = inequality


class RegimeError(CouncilWeightsError):
    """Operation requested in a regime where it is undefined (e.g. critical)."""


class SingularSystemError(CouncilWeightsError, ArithmeticError):
    def __init__(self, message: str, pivot: float):
        super().__init__(f"{message} (smallest pivot magnitude {pivot:.3e})")
        self.pivot = pivot


class ConvergenceError(CouncilWeightsError):
    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class UnresolvedMinimaError(CouncilWeightsError):
    """The set of global minima does not match any structure we can turn into weights."""


class GuardExceeded(CouncilWeightsError):
    pass
