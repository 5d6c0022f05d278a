"""
Test the forward functor: intervals, elbows, circles, tensor products and families
"""

import sys
import os

# Add the parent directory to Python path to import backend modules
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from bordism import (
    Bordism, circle, disjoint_union, insert_sitting_instants, left_elbow, right_elbow, standard,
)
from bundle import PathData, constant_path, flat_bundle, gauge_transform, parallel_transport, straight_path
from field_theory import (
    DUAL, PRIMAL, FieldTheoryEvaluator, evaluate, evaluate_oriented, family_smoothness, gauge_action, make_tft,
)
from geometry import expressions as ex
from geometry.errors import InvariantViolation
from sample_data import (
    incompatible_bundle, random_bundle, random_compatible_bundle, random_gauge, random_loop, random_path,
    rotation_bundle, unit_circle_loop,
)

SNAKE_TOL = 1e-8


def _evaluator(bundle, oriented=False):
    return FieldTheoryEvaluator(make_tft(bundle, oriented))


def test_thin_interval_is_identity():
    print("🧪 Testing intervals...")
    rng = np.random.default_rng(1)
    bundle = random_compatible_bundle(rng)
    result = evaluate(make_tft(bundle), Bordism.of(standard(random_path(rng), [0.4, 0.4])))
    assert np.array_equal(result.value, np.eye(2))
    assert result.domain == (PRIMAL,) and result.codomain == (PRIMAL,)


def test_interval_is_chain_of_transports():
    rng = np.random.default_rng(2)
    bundle = random_compatible_bundle(rng)
    path = random_path(rng)
    result = evaluate(make_tft(bundle), Bordism.of(standard(path, [0.1, 0.35, 0.9])))
    expected = parallel_transport(bundle, path, 0.1, 0.9)
    assert np.linalg.norm(result.value - expected) < 1e-8
    print("✅ interval value is the transport")


def test_constant_right_elbow_is_form():
    """Constant right elbow at x evaluates to beta(x)"""
    beta = np.diag([4.0, -9.0])
    evaluator = _evaluator(flat_bundle(2, 2, beta=beta))
    elbow = right_elbow(constant_path([0.3, -0.2]), 0.0, 1.0)
    domain, codomain, value = evaluator.component_value(elbow)
    assert domain == (PRIMAL, PRIMAL) and codomain == ()
    assert value.shape == (1, 4)
    assert np.allclose(value.reshape(2, 2), beta, atol=1e-14)


def test_constant_left_elbow_is_inverse_form():
    beta = np.diag([4.0, -9.0])
    evaluator = _evaluator(flat_bundle(2, 2, beta=beta))
    elbow = left_elbow(constant_path([0.3, -0.2]), 0.0, 1.0)
    domain, codomain, value = evaluator.component_value(elbow)
    assert domain == () and codomain == (PRIMAL, PRIMAL)
    assert value.shape == (4, 1)
    assert np.allclose(value.reshape(2, 2), np.diag([0.25, -1.0 / 9.0]), atol=1e-14)


@pytest.mark.parametrize("beta", [np.eye(2), np.diag([4.0, -9.0])])
def test_snake_identity_constant(beta):
    """(E (x) id)(id (x) T) = id for constant elbows"""
    print("🧪 Testing the snake identity...")
    evaluator = _evaluator(flat_bundle(2, 2, beta=beta))
    assert evaluator.snake_check(constant_path([0.1, 0.1]), 0.0, 1.0) <= 1e-12


def test_snake_identity_with_transport():
    rng = np.random.default_rng(3)
    for indefinite in (False, True):
        evaluator = _evaluator(random_compatible_bundle(rng, indefinite=indefinite))
        assert evaluator.snake_check(random_path(rng), 0.0, 1.0) <= SNAKE_TOL
    print("✅ snake identity holds with transports")


def test_elbow_midpoint_invariance():
    rng = np.random.default_rng(4)
    evaluator = _evaluator(random_compatible_bundle(rng))
    elbow = right_elbow(random_path(rng), 0.1, 0.9)
    assert evaluator.elbow_midpoint_invariance(elbow, 0.3, 0.6) <= SNAKE_TOL

    with pytest.raises(InvariantViolation):
        evaluator.elbow_midpoint_invariance(elbow, 0.05, 0.5)


def test_incompatible_form_breaks_midpoint_invariance():
    evaluator = FieldTheoryEvaluator(make_tft(incompatible_bundle(), check=False))
    elbow = right_elbow(straight_path([-1.0, 0.0], [1.0, 0.0]), 0.0, 1.0)
    assert evaluator.elbow_midpoint_invariance(elbow, 0.5, 0.25) >= 1e-3
    with pytest.raises(InvariantViolation):
        make_tft(incompatible_bundle())


def test_elbow_swap_symmetry():
    rng = np.random.default_rng(5)
    evaluator = _evaluator(random_compatible_bundle(rng, indefinite=True))
    assert evaluator.elbow_swap_check(random_path(rng), 0.2, 0.8) <= SNAKE_TOL


def test_circle_values():
    print("🧪 Testing circles...")
    flat = evaluate(make_tft(flat_bundle(3, 2)), Bordism.of(circle(random_loop(np.random.default_rng(6)))))
    assert flat.is_scalar
    assert flat.scalar == pytest.approx(3.0, abs=1e-12)

    rotation = evaluate(make_tft(rotation_bundle()), Bordism.of(circle(unit_circle_loop())))
    assert rotation.scalar == pytest.approx(2.0, abs=1e-9)

    rng = np.random.default_rng(7)
    evaluator = _evaluator(random_compatible_bundle(rng, rank=3))
    loop = random_loop(rng)
    assert evaluator.circle_decomposition_check(loop) <= SNAKE_TOL
    assert evaluator.reversal_residual(loop) <= SNAKE_TOL
    print("✅ circle values match holonomy traces")


def test_beta_tau_trace_is_rank():
    evaluator = _evaluator(flat_bundle(3, 2, beta=np.diag([2.0, -1.0, 0.5])))
    assert evaluator.beta_tau_trace([0.0, 0.0]) == pytest.approx(3.0, abs=1e-12)


def test_disjoint_union_is_tensor_product():
    rng = np.random.default_rng(8)
    bundle = random_compatible_bundle(rng)
    tft = make_tft(bundle)
    first = Bordism.of(standard(straight_path([-1.0, 0.0], [1.0, 0.5]), [0.0, 0.4]))
    second = Bordism.of(standard(straight_path([0.5, -1.0], [0.0, 1.0]), [0.6, 0.9]))
    union = evaluate(tft, disjoint_union(second, first))
    expected = np.kron(evaluate(tft, first).value, evaluate(tft, second).value)
    assert np.linalg.norm(union.value - expected) < 1e-12
    assert union.domain == (PRIMAL, PRIMAL)


def test_oriented_interval_and_dual():
    """Positive points carry V, negative points V*: the reversed interval gives P^-T"""
    rng = np.random.default_rng(9)
    bundle = random_bundle(rng)
    path = random_path(rng)
    tft = make_tft(bundle, oriented=True)
    P = parallel_transport(bundle, path, 0.0, 1.0)

    forward = evaluate_oriented(tft, Bordism.of(standard(path, [0.0, 1.0], oriented=True)))
    assert np.linalg.norm(forward.value - P) < 1e-12

    backward = evaluate_oriented(tft, Bordism.of(standard(path, [0.0, 1.0], oriented=True, reversed=True)))
    assert backward.domain == (DUAL,)
    assert np.linalg.norm(backward.value - np.linalg.inv(P).T) < 1e-8

    with pytest.raises(InvariantViolation):
        evaluate_oriented(tft, Bordism.of(standard(path, [0.0, 1.0])))


def test_oriented_snake_identity():
    rng = np.random.default_rng(10)
    evaluator = FieldTheoryEvaluator(make_tft(random_bundle(rng), oriented=True))
    assert evaluator.snake_check(random_path(rng), 0.0, 1.0) <= SNAKE_TOL


def test_oriented_circle_is_holonomy_trace():
    rng = np.random.default_rng(11)
    bundle = random_bundle(rng)
    loop = random_loop(rng)
    result = evaluate_oriented(make_tft(bundle, oriented=True), Bordism.of(circle(loop, oriented=True)))
    evaluator = FieldTheoryEvaluator(make_tft(bundle, oriented=True))
    assert result.scalar == pytest.approx(evaluator.circle_value(loop), abs=1e-12)


def test_segal_residual():
    """Level-2 interval: the composite agrees with the product of its pieces"""
    rng = np.random.default_rng(12)
    evaluator = _evaluator(random_compatible_bundle(rng))
    bordism = Bordism.of(standard(random_path(rng), [0.1, 0.45, 0.9]))
    assert evaluator.segal_residual(bordism) <= 1e-8
    with pytest.raises(InvariantViolation):
        evaluator.segal_residual(Bordism.of(standard(random_path(rng), [0.1, 0.9])))


def test_sitting_instants_leave_value_unchanged():
    rng = np.random.default_rng(13)
    tft = make_tft(random_compatible_bundle(rng))
    bordism = Bordism.of(standard(random_path(rng), [0.1, 0.5, 0.8]))
    plain = evaluate(tft, bordism).value
    sitting = evaluate(tft, insert_sitting_instants(bordism)).value
    assert np.linalg.norm(plain - sitting) < 1e-8


def test_gauge_action_matches_transformed_bundle():
    rng = np.random.default_rng(14)
    bundle = random_compatible_bundle(rng)
    alpha = random_gauge(rng, 2)
    moved = gauge_transform(bundle, alpha)
    bordism = disjoint_union(
        Bordism.of(right_elbow(random_path(rng), 0.2, 0.8)),
        Bordism.of(standard(random_path(rng), [0.0, 1.0])),
    )
    values = gauge_action(evaluate(make_tft(bundle), bordism), alpha)
    direct = evaluate(make_tft(moved), bordism)
    assert np.linalg.norm(values[0] - direct.value) < 1e-8


def test_family_values_are_smooth():
    rng = np.random.default_rng(15)
    tft = make_tft(random_compatible_bundle(rng))
    grid = tuple(np.linspace(0.0, 1.0, 6))
    s = ex.variable("s")
    family = PathData(straight_path([-1.0, 0.0], [1.0, 0.5]).components, grid=grid)
    bordism = Bordism.of(standard(family, [ex.multiply(ex.constant(0.2), s), 1.0]), grid=grid)
    result = evaluate(tft, bordism)
    assert len(result.values) == 6
    assert family_smoothness(result) < 10.0


def main():
    print("🚀 Field theory tests")
    test_thin_interval_is_identity()
    test_interval_is_chain_of_transports()
    test_snake_identity_with_transport()
    test_circle_values()
    print("📊 done")


if __name__ == "__main__":
    main()
