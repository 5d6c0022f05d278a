"""
Numerics package for the field theory toolkit
Exports the expression DSL, ODE layer, linear algebra helpers, errors and schemas
"""

from .errors import (
    FieldTheoryError, EvaluationError, IntegrationError, SingularMatrixError, NondegeneracyError,
    AsymmetryError, DomainExitError, InvariantViolation, ModificationError, ClassificationError, ParseError,
)
from .expressions import SmoothExpr, evaluate, differentiate, substitute, compile_expr, format_expr
from .ode import OdeProblem, fundamental_solution
from .linalg import checked_inverse, indefinite_orthonormalize, signature, kron_all
from . import schemas, settings

__all__ = [
    "FieldTheoryError",
    "EvaluationError",
    "IntegrationError",
    "SingularMatrixError",
    "NondegeneracyError",
    "AsymmetryError",
    "DomainExitError",
    "InvariantViolation",
    "ModificationError",
    "ClassificationError",
    "ParseError",
    "SmoothExpr",
    "evaluate",
    "differentiate",
    "substitute",
    "compile_expr",
    "format_expr",
    "OdeProblem",
    "fundamental_solution",
    "checked_inverse",
    "indefinite_orthonormalize",
    "signature",
    "kron_all",
    "schemas",
    "settings",
]
