"""Exception hierarchy shared by every wall-lab module.

Two families matter to callers: ``InputError`` (the request itself is
inadmissible, the CLI exits with 2) and ``NumericalFailure`` (a well-posed
request whose numerics failed a self-check, the CLI exits with 3).
"""


class WallLabError(Exception):
    """Base class. ``operation`` names the library call that failed."""

    def __init__(self, message: str, *, operation: str | None = None):
        super().__init__(message)
        self.operation = operation

    def __str__(self) -> str:
        text = super().__str__()
        return f"{self.operation}: {text}" if self.operation else text


# 1. Input errors

class InputError(WallLabError, ValueError):
    pass


class MalformedInput(InputError):
    pass


class DomainError(InputError):
    pass


class GridMismatch(InputError):
    pass


class NoBoundState(InputError):
    pass


class NotNormalized(InputError):
    pass


class InvalidScheme(InputError):
    pass


class DegenerateD(InputError):
    pass


class InvalidC(InputError):
    pass


class UnsupportedWall(InputError):
    pass


class DegeneratePath(InputError):
    """Direct path with a == b. ``energy`` carries the rest energy V(a)."""

    def __init__(self, message: str, *, energy: float, operation: str | None = None):
        super().__init__(message, operation=operation)
        self.energy = energy


# 2. Numerical failures

class NumericalFailure(WallLabError, RuntimeError):
    pass


class QuadratureFailure(NumericalFailure):
    pass


class EvaluationFailure(NumericalFailure):
    pass


class FitFailure(NumericalFailure):
    pass


class PoleAtMatching(NumericalFailure):
    pass


class NoTurningPoint(NumericalFailure):
    pass


class NoSolution(NumericalFailure):
    pass


class DivergentLimit(NumericalFailure):
    pass
