"""
Smooth expression DSL with exact symbolic differentiation

Expressions are immutable trees over named real variables (t, s, x1..x9).
Nodes: constant, variable, sum, product, quotient, integer power, sin, cos,
exp and negation. Constructors apply the structural simplifications
0*x -> 0, 1*x -> x, x+0 -> x and fold constant subtrees; nothing more.

Grammar accepted by input_parser.parse_expression:

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" ["-"] INTEGER)?
    atom   := NUMBER | "pi" | VARIABLE | FUNC "(" expr ")" | "(" expr ")"
    FUNC   := sin | cos | exp
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache, singledispatch
from typing import Callable, FrozenSet, Mapping, Sequence, Tuple, Union

from .errors import EvaluationError

logger = logging.getLogger(__name__)

Number = Union[int, float]


class SmoothExpr:
    """Base class of all expression nodes"""

    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return subtract(self, as_expr(other))

    def __rsub__(self, other):
        return subtract(as_expr(other), self)

    def __mul__(self, other):
        return multiply(self, as_expr(other))

    def __rmul__(self, other):
        return multiply(as_expr(other), self)

    def __truediv__(self, other):
        return divide(self, as_expr(other))

    def __rtruediv__(self, other):
        return divide(as_expr(other), self)

    def __neg__(self):
        return negate(self)

    def __pow__(self, exponent):
        if isinstance(exponent, bool) or not isinstance(exponent, int):
            raise TypeError("only integer exponents are supported")
        return power(self, exponent)

    def __str__(self):
        return format_expr(self)

    @property
    def variables(self) -> FrozenSet[str]:
        return free_variables(self)


@dataclass(frozen=True)
class Constant(SmoothExpr):
    value: float


@dataclass(frozen=True)
class Variable(SmoothExpr):
    name: str


@dataclass(frozen=True)
class Sum(SmoothExpr):
    left: SmoothExpr
    right: SmoothExpr


@dataclass(frozen=True)
class Product(SmoothExpr):
    left: SmoothExpr
    right: SmoothExpr


@dataclass(frozen=True)
class Quotient(SmoothExpr):
    numerator: SmoothExpr
    denominator: SmoothExpr


@dataclass(frozen=True)
class Power(SmoothExpr):
    base: SmoothExpr
    exponent: int


@dataclass(frozen=True)
class Negation(SmoothExpr):
    arg: SmoothExpr


@dataclass(frozen=True)
class Sin(SmoothExpr):
    arg: SmoothExpr


@dataclass(frozen=True)
class Cos(SmoothExpr):
    arg: SmoothExpr


@dataclass(frozen=True)
class Exp(SmoothExpr):
    arg: SmoothExpr


ZERO = Constant(0.0)
ONE = Constant(1.0)
T = Variable("t")
S = Variable("s")


def as_expr(value) -> SmoothExpr:
    if isinstance(value, SmoothExpr):
        return value
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return Constant(float(value))
    raise TypeError(f"cannot use {type(value).__name__} as an expression")


def constant(value: Number) -> Constant:
    return Constant(float(value))


def variable(name: str) -> Variable:
    return Variable(name)


def coordinate(mu: int) -> Variable:
    """Coordinate x_mu of the target box (1-based)"""
    return Variable(f"x{mu}")


def _is_const(expr: SmoothExpr, value: float = None) -> bool:
    if not isinstance(expr, Constant):
        return False
    return value is None or expr.value == value


# Simplifying constructors

def add(left: SmoothExpr, right: SmoothExpr) -> SmoothExpr:
    if _is_const(left) and _is_const(right):
        return Constant(left.value + right.value)
    if _is_const(left, 0.0):
        return right
    if _is_const(right, 0.0):
        return left
    return Sum(left, right)


def negate(arg: SmoothExpr) -> SmoothExpr:
    if _is_const(arg):
        return Constant(-arg.value)
    if isinstance(arg, Negation):
        return arg.arg
    return Negation(arg)


def subtract(left: SmoothExpr, right: SmoothExpr) -> SmoothExpr:
    return add(left, negate(right))


def multiply(left: SmoothExpr, right: SmoothExpr) -> SmoothExpr:
    if _is_const(left) and _is_const(right):
        return Constant(left.value * right.value)
    if _is_const(left, 0.0) or _is_const(right, 0.0):
        return ZERO
    if _is_const(left, 1.0):
        return right
    if _is_const(right, 1.0):
        return left
    if _is_const(left, -1.0):
        return negate(right)
    if _is_const(right, -1.0):
        return negate(left)
    return Product(left, right)


def divide(numerator: SmoothExpr, denominator: SmoothExpr) -> SmoothExpr:
    if _is_const(denominator, 1.0):
        return numerator
    if _is_const(numerator, 0.0) and not _is_const(denominator, 0.0):
        return ZERO
    if _is_const(numerator) and _is_const(denominator) and denominator.value != 0.0:
        return Constant(numerator.value / denominator.value)
    return Quotient(numerator, denominator)


def power(base: SmoothExpr, exponent: int) -> SmoothExpr:
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if _is_const(base) and (base.value != 0.0 or exponent > 0):
        return Constant(base.value ** exponent)
    return Power(base, exponent)


def sin(arg) -> SmoothExpr:
    arg = as_expr(arg)
    return Constant(math.sin(arg.value)) if _is_const(arg) else Sin(arg)


def cos(arg) -> SmoothExpr:
    arg = as_expr(arg)
    return Constant(math.cos(arg.value)) if _is_const(arg) else Cos(arg)


def exp(arg) -> SmoothExpr:
    arg = as_expr(arg)
    return Constant(math.exp(arg.value)) if _is_const(arg) else Exp(arg)


def linear_combination(coefficients: Sequence[float], terms: Sequence[SmoothExpr]) -> SmoothExpr:
    """sum_k c_k * e_k, skipping zero coefficients"""
    result = ZERO
    for c, term in zip(coefficients, terms):
        if c != 0.0:
            result = add(result, multiply(Constant(float(c)), term))
    return result


# Free variables

@singledispatch
def free_variables(expr) -> FrozenSet[str]:
    raise TypeError(f"not an expression: {type(expr).__name__}")


@free_variables.register(Constant)
def _(expr):
    return frozenset()


@free_variables.register(Variable)
def _(expr):
    return frozenset({expr.name})


@free_variables.register(Sum)
@free_variables.register(Product)
def _(expr):
    return free_variables(expr.left) | free_variables(expr.right)


@free_variables.register(Quotient)
def _(expr):
    return free_variables(expr.numerator) | free_variables(expr.denominator)


@free_variables.register(Power)
def _(expr):
    return free_variables(expr.base)


@free_variables.register(Negation)
@free_variables.register(Sin)
@free_variables.register(Cos)
@free_variables.register(Exp)
def _(expr):
    return free_variables(expr.arg)


# Evaluation

@singledispatch
def _evaluate(expr, point: Mapping[str, float]) -> float:
    raise TypeError(f"not an expression: {type(expr).__name__}")


@_evaluate.register(Constant)
def _(expr, point):
    return expr.value


@_evaluate.register(Variable)
def _(expr, point):
    try:
        return float(point[expr.name])
    except KeyError:
        raise EvaluationError(f"unassigned variable '{expr.name}'", subtree=expr) from None


@_evaluate.register(Sum)
def _(expr, point):
    return _evaluate(expr.left, point) + _evaluate(expr.right, point)


@_evaluate.register(Product)
def _(expr, point):
    return _evaluate(expr.left, point) * _evaluate(expr.right, point)


@_evaluate.register(Quotient)
def _(expr, point):
    denominator = _evaluate(expr.denominator, point)
    if denominator == 0.0:
        raise EvaluationError("division by zero", subtree=expr)
    return _evaluate(expr.numerator, point) / denominator


@_evaluate.register(Power)
def _(expr, point):
    base = _evaluate(expr.base, point)
    if base == 0.0 and expr.exponent < 0:
        raise EvaluationError("division by zero", subtree=expr)
    return base ** expr.exponent


@_evaluate.register(Negation)
def _(expr, point):
    return -_evaluate(expr.arg, point)


@_evaluate.register(Sin)
def _(expr, point):
    return math.sin(_evaluate(expr.arg, point))


@_evaluate.register(Cos)
def _(expr, point):
    return math.cos(_evaluate(expr.arg, point))


@_evaluate.register(Exp)
def _(expr, point):
    try:
        return math.exp(_evaluate(expr.arg, point))
    except OverflowError:
        raise EvaluationError("overflow in exp", subtree=expr) from None


def evaluate(expr: SmoothExpr, point: Mapping[str, float]) -> float:
    """
    Value of the expression at a variable assignment

    Raises EvaluationError for unassigned variables, division by zero
    or a non-finite result, naming the offending subtree.
    """
    try:
        value = _evaluate(expr, point)
    except OverflowError:
        raise EvaluationError("overflow", subtree=expr) from None
    if not math.isfinite(value):
        raise EvaluationError("non-finite value", subtree=expr)
    return value


# Differentiation

@singledispatch
def _derivative(expr, var: str) -> SmoothExpr:
    raise TypeError(f"cannot differentiate {type(expr).__name__}")


@_derivative.register(Constant)
def _(expr, var):
    return ZERO


@_derivative.register(Variable)
def _(expr, var):
    return ONE if expr.name == var else ZERO


@_derivative.register(Sum)
def _(expr, var):
    return add(_derivative(expr.left, var), _derivative(expr.right, var))


@_derivative.register(Product)
def _(expr, var):
    """Product rule"""
    return add(
        multiply(_derivative(expr.left, var), expr.right),
        multiply(expr.left, _derivative(expr.right, var)),
    )


@_derivative.register(Quotient)
def _(expr, var):
    """Quotient rule"""
    n, d = expr.numerator, expr.denominator
    top = subtract(multiply(_derivative(n, var), d), multiply(n, _derivative(d, var)))
    return divide(top, power(d, 2))


@_derivative.register(Power)
def _(expr, var):
    k = expr.exponent
    return multiply(multiply(Constant(float(k)), power(expr.base, k - 1)), _derivative(expr.base, var))


@_derivative.register(Negation)
def _(expr, var):
    return negate(_derivative(expr.arg, var))


@_derivative.register(Sin)
def _(expr, var):
    return multiply(cos(expr.arg), _derivative(expr.arg, var))


@_derivative.register(Cos)
def _(expr, var):
    return multiply(negate(sin(expr.arg)), _derivative(expr.arg, var))


@_derivative.register(Exp)
def _(expr, var):
    return multiply(exp(expr.arg), _derivative(expr.arg, var))


@lru_cache(maxsize=4096)
def differentiate(expr: SmoothExpr, var: str) -> SmoothExpr:
    """Exact symbolic derivative with respect to `var`"""
    return _derivative(expr, var)


# Substitution

@singledispatch
def _substitute(expr, mapping):
    raise TypeError(f"not an expression: {type(expr).__name__}")


@_substitute.register(Constant)
def _(expr, mapping):
    return expr


@_substitute.register(Variable)
def _(expr, mapping):
    return mapping.get(expr.name, expr)


@_substitute.register(Sum)
def _(expr, mapping):
    return add(_substitute(expr.left, mapping), _substitute(expr.right, mapping))


@_substitute.register(Product)
def _(expr, mapping):
    return multiply(_substitute(expr.left, mapping), _substitute(expr.right, mapping))


@_substitute.register(Quotient)
def _(expr, mapping):
    return divide(_substitute(expr.numerator, mapping), _substitute(expr.denominator, mapping))


@_substitute.register(Power)
def _(expr, mapping):
    return power(_substitute(expr.base, mapping), expr.exponent)


@_substitute.register(Negation)
def _(expr, mapping):
    return negate(_substitute(expr.arg, mapping))


@_substitute.register(Sin)
def _(expr, mapping):
    return sin(_substitute(expr.arg, mapping))


@_substitute.register(Cos)
def _(expr, mapping):
    return cos(_substitute(expr.arg, mapping))


@_substitute.register(Exp)
def _(expr, mapping):
    return exp(_substitute(expr.arg, mapping))


def substitute(expr: SmoothExpr, mapping: Mapping[str, object]) -> SmoothExpr:
    """Replace variables by expressions (or numbers), re-simplifying on the way up"""
    return _substitute(expr, {name: as_expr(value) for name, value in mapping.items()})


# Printing and compilation

_PRECEDENCE = {Sum: 1, Negation: 2, Product: 3, Quotient: 3, Power: 4}


def _wrap(child: SmoothExpr, parent_precedence: int, source: Callable[[SmoothExpr], str]) -> str:
    text = source(child)
    if _PRECEDENCE.get(type(child), 5) < parent_precedence:
        return f"({text})"
    return text


def format_expr(expr: SmoothExpr) -> str:
    """Infix rendering in the input grammar"""
    if isinstance(expr, Constant):
        return f"{expr.value:.17g}"
    if isinstance(expr, Variable):
        return expr.name
    if isinstance(expr, Sum):
        if isinstance(expr.right, Negation):
            return f"{format_expr(expr.left)} - {_wrap(expr.right.arg, 2, format_expr)}"
        return f"{format_expr(expr.left)} + {format_expr(expr.right)}"
    if isinstance(expr, Product):
        return f"{_wrap(expr.left, 3, format_expr)}*{_wrap(expr.right, 4, format_expr)}"
    if isinstance(expr, Quotient):
        return f"{_wrap(expr.numerator, 3, format_expr)}/{_wrap(expr.denominator, 4, format_expr)}"
    if isinstance(expr, Power):
        return f"{_wrap(expr.base, 5, format_expr)}^{expr.exponent}"
    if isinstance(expr, Negation):
        return f"-{_wrap(expr.arg, 3, format_expr)}"
    name = type(expr).__name__.lower()
    return f"{name}({format_expr(expr.arg)})"


@singledispatch
def _python_source(expr) -> str:
    raise TypeError(f"not an expression: {type(expr).__name__}")


@_python_source.register(Constant)
def _(expr):
    return repr(expr.value)


@_python_source.register(Variable)
def _(expr):
    return expr.name


@_python_source.register(Sum)
def _(expr):
    return f"({_python_source(expr.left)} + {_python_source(expr.right)})"


@_python_source.register(Product)
def _(expr):
    return f"({_python_source(expr.left)} * {_python_source(expr.right)})"


@_python_source.register(Quotient)
def _(expr):
    return f"({_python_source(expr.numerator)} / {_python_source(expr.denominator)})"


@_python_source.register(Power)
def _(expr):
    return f"({_python_source(expr.base)} ** {expr.exponent})"


@_python_source.register(Negation)
def _(expr):
    return f"(-{_python_source(expr.arg)})"


@_python_source.register(Sin)
def _(expr):
    return f"_sin({_python_source(expr.arg)})"


@_python_source.register(Cos)
def _(expr):
    return f"_cos({_python_source(expr.arg)})"


@_python_source.register(Exp)
def _(expr):
    return f"_exp({_python_source(expr.arg)})"


_NAMESPACE = {"_sin": math.sin, "_cos": math.cos, "_exp": math.exp}


class CompiledExpr:
    """
    Fast scalar evaluator generated from an expression

    Arguments are positional, in the order of `variables`. Arithmetic
    failures are re-diagnosed through `evaluate` so the error names the
    offending subtree.
    """

    def __init__(self, expr: SmoothExpr, variables: Tuple[str, ...]):
        missing = free_variables(expr) - set(variables)
        if missing:
            raise EvaluationError(f"unassigned variable '{sorted(missing)[0]}'", subtree=expr)
        self.expr = expr
        self.variables = variables
        source = f"lambda {', '.join(variables)}: {_python_source(expr)}"
        self._fn = eval(compile(source, "<smooth-expr>", "eval"), dict(_NAMESPACE))

    def __call__(self, *args: float) -> float:
        try:
            return self._fn(*args)
        except (ZeroDivisionError, OverflowError, ValueError):
            evaluate(self.expr, dict(zip(self.variables, args)))
            raise


@lru_cache(maxsize=4096)
def compile_expr(expr: SmoothExpr, variables: Tuple[str, ...]) -> CompiledExpr:
    return CompiledExpr(expr, tuple(variables))
