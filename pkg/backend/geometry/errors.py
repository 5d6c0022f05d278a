"""
Exception hierarchy for the field theory toolkit
Every error raised by the library derives from FieldTheoryError
"""

from typing import Optional, Sequence


class FieldTheoryError(Exception):
    """Base class for all toolkit errors"""


class EvaluationError(FieldTheoryError):
    """Expression could not be evaluated (unassigned variable, division by zero)"""

    def __init__(self, message: str, subtree=None):
        super().__init__(message if subtree is None else f"{message} in subtree `{subtree}`")
        self.subtree = subtree


class IntegrationError(FieldTheoryError):
    """Adaptive integrator gave up (step-size underflow, non-finite coefficient)"""

    def __init__(self, message: str, t: Optional[float] = None):
        super().__init__(message if t is None else f"{message} (t = {t:.17g})")
        self.t = t


class SingularMatrixError(FieldTheoryError):
    """Matrix failed the |det| > tolerance invertibility test"""

    def __init__(self, message: str, determinant: float, condition: float):
        super().__init__(f"{message}: |det| = {abs(determinant):.3e}, condition estimate = {condition:.3e}")
        self.determinant = determinant
        self.condition = condition


class NondegeneracyError(SingularMatrixError):
    """Bilinear form is numerically degenerate"""


class AsymmetryError(FieldTheoryError):
    """Matrix expected to be symmetric is not"""

    def __init__(self, message: str, deviation: float):
        super().__init__(f"{message}: max |B - B^T| = {deviation:.3e}")
        self.deviation = deviation


class DomainExitError(FieldTheoryError):
    """Path left the bundle's domain box"""

    def __init__(self, t: float, point: Sequence[float]):
        coords = ", ".join(f"{x:.6g}" for x in point)
        super().__init__(f"path leaves the domain at t = {t:.17g}, point ({coords})")
        self.t = t
        self.point = tuple(point)


class InvariantViolation(FieldTheoryError):
    """A named data-model invariant does not hold"""

    def __init__(self, invariant: str, detail: str):
        super().__init__(f"{invariant} violated: {detail}")
        self.invariant = invariant
        self.detail = detail


class ModificationError(FieldTheoryError):
    """Modification function could not be constructed"""


class ClassificationError(FieldTheoryError):
    """Oracle does not behave like a valid field theory"""


class ParseError(FieldTheoryError):
    """Syntax error in an input file or expression"""

    def __init__(self, message: str, line: int = 0, column: int = 0, expected: Sequence[str] = ()):
        location = f"line {line}, column {column}: " if line else (f"column {column}: " if column else "")
        hint = f" (expected {', '.join(expected)})" if expected else ""
        super().__init__(f"{location}{message}{hint}")
        self.line = line
        self.column = column
        self.expected = tuple(expected)
