"""Exception hierarchy shared by all forge modules."""

from __future__ import annotations


class ForgeError(Exception):
    """Base class for every error raised by forge."""


class DomainError(ForgeError, ArithmeticError):
    """Evaluation left the real domain (log of a nonpositive value, pole, ...)."""


class UnboundSymbol(ForgeError, KeyError):
    """An uninterpreted function symbol has no binding in the evaluation context."""

    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"no binding for uninterpreted symbol {self.name!r}"


class WitnessedError(ForgeError):
    """Failure carrying an optional sample point that exhibits it."""

    def __init__(self, message: str, witness: float | None = None):
        super().__init__(message)
        self.witness = witness


class NotAnEigenfunction(WitnessedError):
    pass


class NotAKernelElement(WitnessedError):
    pass


class ZeroCrossing(WitnessedError):
    pass


class NotDivisible(WitnessedError):
    pass


class UnsupportedOrder(ForgeError, ValueError):
    pass


class LimitExceeded(ForgeError, ValueError):
    pass


class QuantizationMismatch(ForgeError, ValueError):
    pass


class ChainError(ForgeError):
    """A chain step failed; ``index`` is the zero-based step position."""

    def __init__(self, index: int, reason: Exception):
        super().__init__(f"step {index}: {type(reason).__name__}: {reason}")
        self.index = index
        self.reason = reason


class TooManySkipped(ForgeError):
    pass


class SingularLeadingCoefficient(WitnessedError):
    pass


class DegenerateResidual(ForgeError):
    """Residuals sit at the rounding floor, so no order can be estimated."""

    def __init__(self, message: str = "exact"):
        super().__init__(message)


class ConfigError(ForgeError):
    """Invalid job configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message
