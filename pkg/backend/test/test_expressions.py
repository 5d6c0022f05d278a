"""
Test the expression DSL and its parser
"""

import math
import sys
import os

# Add the parent directory to Python path to import backend modules
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import pytest
from hypothesis import given, settings as hypothesis_settings, strategies as st

from geometry import expressions as ex
from geometry.errors import EvaluationError, ParseError
from input_parser import parse_expression, parse_number, tokenize


def test_evaluate_examples():
    """Values of a few parsed expressions"""
    print("🧪 Testing expression evaluation...")
    assert ex.evaluate(parse_expression("t^2"), {"t": 3.0}) == pytest.approx(9.0, abs=1e-12)
    assert ex.evaluate(parse_expression("sin(t)"), {"t": 0.0}) == pytest.approx(0.0, abs=1e-12)
    assert ex.evaluate(parse_expression("exp(t)*t"), {"t": 1.0}) == pytest.approx(math.e, abs=1e-12)
    assert ex.evaluate(parse_expression("-2*pi"), {}) == pytest.approx(-2 * math.pi)
    print("✅ evaluation matches")


def test_precedence_and_unary_minus():
    assert ex.evaluate(parse_expression("1 + 2*3^2"), {}) == pytest.approx(19.0)
    assert ex.evaluate(parse_expression("-t^2"), {"t": 2.0}) == pytest.approx(-4.0)
    assert ex.evaluate(parse_expression("(1 + t)/(1 - t)"), {"t": 0.5}) == pytest.approx(3.0)
    assert ex.evaluate(parse_expression("t^-2"), {"t": 2.0}) == pytest.approx(0.25)


def test_unassigned_variable():
    with pytest.raises(EvaluationError) as info:
        ex.evaluate(parse_expression("t + s"), {"t": 1.0})
    assert "s" in str(info.value)


def test_division_by_zero_names_subtree():
    with pytest.raises(EvaluationError):
        ex.evaluate(parse_expression("1/(t - 1)"), {"t": 1.0})


def test_derivative_examples():
    """Symbolic derivatives against the expected closed forms"""
    print("🧪 Testing symbolic differentiation...")
    square = ex.differentiate(parse_expression("t^2"), "t")
    for t in (-1.5, 0.0, 2.0):
        assert ex.evaluate(square, {"t": t}) == pytest.approx(2 * t, abs=1e-12)

    f = parse_expression("t*exp(t)")
    df = ex.differentiate(f, "t")
    assert ex.evaluate(df, {"t": 1.0}) == pytest.approx(2 * math.e, abs=1e-12)

    h = 1e-5
    finite = (ex.evaluate(f, {"t": 1.0 + h}) - ex.evaluate(f, {"t": 1.0 - h})) / (2 * h)
    assert abs(finite - ex.evaluate(df, {"t": 1.0})) < 1e-8
    print("✅ derivatives match")


def test_derivative_of_other_variable_is_zero():
    d = ex.differentiate(parse_expression("sin(x1)*x2"), "t")
    assert ex.evaluate(d, {"x1": 0.3, "x2": 1.2}) == 0.0


@hypothesis_settings(max_examples=30, deadline=None)
@given(st.floats(min_value=-2.0, max_value=2.0), st.floats(min_value=-2.0, max_value=2.0))
def test_derivative_matches_central_difference(t, s):
    f = parse_expression("sin(t*s) + cos(t)^3 - exp(-t)*s")
    df = ex.differentiate(f, "t")
    h = 1e-5
    finite = (ex.evaluate(f, {"t": t + h, "s": s}) - ex.evaluate(f, {"t": t - h, "s": s})) / (2 * h)
    assert abs(finite - ex.evaluate(df, {"t": t, "s": s})) < 1e-6


def _trees():
    leaves = st.one_of(st.just(ex.T), st.floats(min_value=-1.0, max_value=1.0).map(ex.constant))

    def extend(children):
        pairs = st.tuples(children, children)
        return st.one_of(
            pairs.map(lambda p: ex.add(*p)),
            pairs.map(lambda p: ex.subtract(*p)),
            pairs.map(lambda p: ex.multiply(*p)),
            children.map(ex.sin),
            children.map(ex.cos),
            children.map(lambda e: ex.exp(ex.sin(e))),
        )

    return st.recursive(leaves, extend, max_leaves=8)


@hypothesis_settings(max_examples=100, deadline=None)
@given(_trees(), st.floats(min_value=-1.0, max_value=1.0))
def test_random_tree_derivative_matches_finite_difference(tree, t):
    """Symbolic derivative of a random tree against a fourth-order central difference"""
    h = 1e-3
    f = lambda u: ex.evaluate(tree, {"t": u})
    finite = (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h)
    exact = ex.evaluate(ex.differentiate(tree, "t"), {"t": t})
    assert abs(finite - exact) <= 1e-7 * (1.0 + abs(exact))


def test_substitute_and_compile():
    f = parse_expression("t^2 + s")
    g = ex.substitute(f, {"t": parse_expression("2*t")})
    compiled = ex.compile_expr(g, ("t", "s"))
    assert compiled(1.5, 0.25) == pytest.approx(9.25)


def test_parse_number():
    assert parse_number("2*pi") == pytest.approx(2 * math.pi)
    assert parse_number("1e-3") == pytest.approx(1e-3)
    with pytest.raises(ParseError):
        parse_number("t")


def test_tokenize_columns():
    tokens = tokenize("sin(t) + 2")
    assert [t.text for t in tokens] == ["sin", "(", "t", ")", "+", "2", ""]
    assert [t.column for t in tokens[:6]] == [1, 4, 5, 6, 8, 10]


def test_parse_errors_carry_location():
    """Malformed expressions report line and column"""
    print("🧪 Testing parser errors...")
    with pytest.raises(ParseError) as info:
        parse_expression("t + * 2", line=3)
    assert info.value.line == 3
    assert info.value.column == 5

    with pytest.raises(ParseError) as info:
        parse_expression("sin(t", line=1)
    assert "')'" in str(info.value)

    with pytest.raises(ParseError) as info:
        parse_expression("y + 1", variables=("t",))
    assert info.value.column == 1
    assert "unknown name" in str(info.value)

    with pytest.raises(ParseError):
        parse_expression("t^0.5")

    with pytest.raises(ParseError) as info:
        parse_expression("t $ 2")
    assert info.value.column == 3
    print("✅ parser errors carry their location")


def main():
    print("🚀 Expression tests")
    test_evaluate_examples()
    test_precedence_and_unary_minus()
    test_derivative_examples()
    test_substitute_and_compile()
    test_parse_errors_carry_location()
    print("📊 done")


if __name__ == "__main__":
    main()
