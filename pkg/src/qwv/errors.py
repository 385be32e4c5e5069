"""Exception hierarchy shared by every layer of the package."""

from __future__ import annotations


class QWVError(Exception):
    """Base class for all library errors."""


class ShapeMismatch(QWVError, ValueError):
    pass


class BadIndex(QWVError, IndexError):
    pass


class NotHermitian(QWVError, ValueError):
    pass


class NoConvergence(QWVError, ArithmeticError):
    def __init__(self, message: str, residual: float | None = None, iterations: int | None = None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


# labelled operators

class UnknownLabel(QWVError, KeyError):
    pass


class LabelClash(QWVError, ValueError):
    pass


class LabelMismatch(QWVError, ValueError):
    pass


class NotSquare(QWVError, ValueError):
    pass


class NotSuperset(QWVError, ValueError):
    pass


# gates and types

class UnknownGate(QWVError, KeyError):
    pass


class BadParam(QWVError, ValueError):
    pass


class NotUnitary(QWVError, ValueError):
    pass


class NotOrthonormal(QWVError, ValueError):
    pass


# language front end

class QWhileSyntaxError(QWVError, SyntaxError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{message} (line {line}, col {col})")
        self.line = line
        self.col = col


class QWhileTypeError(QWVError, TypeError):
    pass


class DisjointnessError(QWhileTypeError):
    pass


class UnknownVariable(QWVError, KeyError):
    pass


class NotAWhile(QWVError, TypeError):
    pass


# semantics / logic

class DimensionTooLarge(QWVError, MemoryError):
    pass


class SideConditionViolated(QWVError):
    def __init__(self, rule: str, condition: str):
        super().__init__(f"{rule}: side condition violated: {condition}")
        self.rule = rule
        self.condition = condition


class UnknownRule(QWVError, KeyError):
    pass


class StepFailed(QWVError):
    def __init__(self, index: int, reason: str):
        super().__init__(f"step {index} failed: {reason}")
        self.index = index
        self.reason = reason


class CounterexampleFound(QWVError, AssertionError):
    def __init__(self, rule: str, path: str | None, detail: str = ""):
        super().__init__(f"counterexample for {rule}: {detail} (saved to {path})")
        self.rule = rule
        self.path = path


class NotNormalized(UserWarning):
    pass


class BadHidingFunction(QWVError, ValueError):
    pass
