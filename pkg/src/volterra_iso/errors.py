"""Exception types raised across the package."""

from __future__ import annotations


class VolterraError(Exception):
    """Base class for all package errors."""


class SpectrumError(VolterraError, ValueError):
    """An eigenvalue list is not strictly decreasing and positive."""


class SpectrumParseError(SpectrumError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class BisectionError(VolterraError):
    """Sturm bisection cannot resolve eigenvalues to the requested tolerance."""


class NoConvergence(VolterraError):
    pass


class SingularJacobian(VolterraError):
    pass


class StepUnderflow(VolterraError):
    pass


class NotConverged(VolterraError):
    """A trajectory did not reach an equilibrium before ``t_max``."""


class AmbiguousMatch(VolterraError):
    """A state is not unambiguously close to a single critical matrix."""


class GapTooSmall(VolterraError):
    pass


class NonIntegerResult(VolterraError):
    pass


class BudgetExceeded(VolterraError):
    pass
