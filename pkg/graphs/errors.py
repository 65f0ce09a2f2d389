"""
Exception hierarchy shared by all toolkit packages.
The CLI maps these onto process exit codes.
"""

from typing import Optional


class ToolkitError(Exception):
    """Base class for all toolkit errors."""


class GraphValidationError(ToolkitError, ValueError):
    """A graph (or a derived object) violates an admissibility invariant."""

    def __init__(self, message: str, violations: Optional[list] = None):
        super().__init__(message)
        self.violations = list(violations or [])


class UnknownVertexError(ToolkitError, KeyError):
    """A vertex id that is not part of the graph was requested."""


class GraphFormatError(ToolkitError, ValueError):
    """A graph description file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        location = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{location}")
        self.line = line
        self.column = column


class SolverConvergenceError(ToolkitError, RuntimeError):
    """An iterative solver, contour count or extrapolation did not converge."""

    def __init__(self, message: str, partial=None):
        super().__init__(message)
        self.partial = partial


class BoundNotApplicableError(ToolkitError, ValueError):
    """The eigenvalue comparison bracket has a non-positive denominator."""
