"""
Test bundles, pullback coefficients, parallel transport and holonomy
"""

import math
import sys
import os
import warnings

# Add the parent directory to Python path to import backend modules
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest
from hypothesis import given, settings as hypothesis_settings, strategies as st
from scipy.linalg import expm

from bordism import cut_rescale
from bundle import (
    BundleData, PathData, check_compatibility, coevaluation, constant_path, flat_bundle, gauge_transform,
    holonomy, holonomy_trace, parallel_transport, pullback_coefficient, reparametrize, reverse_loop,
    straight_path, transport_preserves_form, validate_bundle, validate_path,
)
from geometry import expressions as ex
from geometry.errors import DomainExitError, InvariantViolation, SingularMatrixError
from geometry.schemas import CompatibilityReport
from sample_data import (
    ROTATION, constant_rotation_bundle, incompatible_bundle, random_compatible_bundle, random_gauge,
    random_increasing_map, random_loop, random_path, rotation_bundle, unit_circle_loop,
)


def test_pullback_coefficient_on_unit_circle():
    """omega = C (x1 dx2 - x2 dx1) pulls back to the constant C along the unit circle"""
    print("🧪 Testing pullback coefficients...")
    A = pullback_coefficient(rotation_bundle(), unit_circle_loop())
    for t in np.linspace(0.0, 2 * math.pi, 7):
        assert np.allclose(A(t), ROTATION, atol=1e-14)


def test_pullback_coefficient_scales_with_velocity():
    path = PathData.from_exprs([ex.power(ex.T, 2), ex.ZERO])
    A = pullback_coefficient(constant_rotation_bundle(), path)
    for t in (0.0, 0.3, 1.0):
        assert np.allclose(A(t), 2 * t * ROTATION, atol=1e-14)


def test_half_turn_transport_is_minus_identity():
    """P over [0, pi] on the unit circle equals -I"""
    print("🧪 Testing parallel transport...")
    P = parallel_transport(rotation_bundle(), unit_circle_loop(), 0.0, math.pi)
    assert np.linalg.norm(P + np.eye(2)) < 1e-9
    print("✅ half turn gives -I")


def test_rotation_holonomy_trace():
    H = holonomy(rotation_bundle(), unit_circle_loop())
    assert np.linalg.norm(H - np.eye(2)) < 1e-9
    assert holonomy_trace(rotation_bundle(), unit_circle_loop()) == pytest.approx(2.0, abs=1e-9)


def test_flat_holonomy_trace_is_rank():
    rng = np.random.default_rng(3)
    bundle = flat_bundle(3, 2)
    assert holonomy_trace(bundle, random_loop(rng)) == pytest.approx(3.0, abs=1e-12)


def test_constant_path_transport_is_identity():
    P = parallel_transport(rotation_bundle(), constant_path([0.5, -0.2]), 0.0, 1.0)
    assert np.linalg.norm(P - np.eye(2)) <= 1e-12


def test_straight_line_transport_matches_exponential():
    """Constant omega_1 = C along x1: P = exp(-t C)"""
    path = straight_path([-1.0, 0.0], [1.0, 0.0])
    P = parallel_transport(constant_rotation_bundle(), path, 0.0, 1.5)
    assert np.linalg.norm(P - expm(-1.5 * ROTATION)) < 1e-9


def test_transport_multiplicativity():
    rng = np.random.default_rng(11)
    bundle = random_compatible_bundle(rng)
    path = random_path(rng)
    whole = parallel_transport(bundle, path, 0.0, 1.0)
    split = parallel_transport(bundle, path, 0.4, 1.0) @ parallel_transport(bundle, path, 0.0, 0.4)
    assert np.linalg.norm(whole - split) < 1e-8

    rescaled = parallel_transport(bundle, cut_rescale(path, 0.0, 0.4), 0.0, 1.0)
    assert np.linalg.norm(rescaled - parallel_transport(bundle, path, 0.0, 0.4)) < 1e-8


def test_backward_transport_is_inverse():
    rng = np.random.default_rng(5)
    bundle = random_compatible_bundle(rng)
    path = random_path(rng)
    forward = parallel_transport(bundle, path, 0.0, 1.0)
    backward = parallel_transport(bundle, path, 1.0, 0.0)
    assert np.linalg.norm(backward @ forward - np.eye(2)) < 1e-8


@hypothesis_settings(max_examples=8, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_reparametrization_invariance(seed):
    rng = np.random.default_rng(seed)
    bundle = random_compatible_bundle(rng)
    path = random_path(rng)
    F = random_increasing_map(rng)
    P = parallel_transport(bundle, path, 0.0, 1.0)
    Q = parallel_transport(bundle, reparametrize(path, F), 0.0, 1.0)
    assert np.linalg.norm(P - Q) < 1e-8


def test_reversed_loop_holonomy_is_inverse():
    rng = np.random.default_rng(21)
    bundle = random_compatible_bundle(rng, rank=3)
    loop = random_loop(rng)
    H = holonomy(bundle, loop)
    H_reversed = holonomy(bundle, reverse_loop(loop))
    assert np.linalg.norm(H_reversed @ H - np.eye(3)) < 1e-8


def test_coevaluation_inverts_form():
    """tau for beta = diag(4, -9) is diag(1/4, -1/9)"""
    bundle = flat_bundle(2, 2, beta=np.diag([4.0, -9.0]))
    tau = coevaluation(bundle, [0.0, 0.0])
    assert np.allclose(tau, np.diag([0.25, -1.0 / 9.0]), atol=1e-14)


def test_compatibility_residual():
    print("🧪 Testing compatibility checks...")
    report = check_compatibility(incompatible_bundle())
    assert not report.passed
    assert report.max_residual == pytest.approx(2.0, abs=1e-12)
    assert report.worst_direction == 1

    rng = np.random.default_rng(9)
    for indefinite in (False, True):
        bundle = random_compatible_bundle(rng, rank=3, indefinite=indefinite)
        assert check_compatibility(bundle).passed
    print("✅ compatibility residuals as expected")


def test_reports_validate_from_attributes():
    """Reports are read back from any object carrying their fields, without deprecation warnings"""
    report = check_compatibility(incompatible_bundle())
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        copy = CompatibilityReport.model_validate(report)
    assert copy == report
    assert CompatibilityReport.model_config["from_attributes"]



def test_compatible_transport_preserves_form():
    rng = np.random.default_rng(13)
    bundle = random_compatible_bundle(rng, indefinite=True)
    assert transport_preserves_form(bundle, random_path(rng), 0.0, 1.0) < 1e-8


def test_gauge_transform_conjugates_transport():
    rng = np.random.default_rng(17)
    bundle = random_compatible_bundle(rng)
    alpha = random_gauge(rng, 2)
    moved = gauge_transform(bundle, alpha)
    path = random_path(rng)
    P = parallel_transport(bundle, path, 0.0, 1.0)
    Q = parallel_transport(moved, path, 0.0, 1.0)
    assert np.linalg.norm(Q - alpha @ P @ np.linalg.inv(alpha)) < 1e-8
    assert check_compatibility(moved).passed


def test_validation_errors():
    with pytest.raises(InvariantViolation):
        BundleData.from_matrices([[[0.0]]], [[1.0]], [(1.0, -1.0)])
    with pytest.raises(SingularMatrixError):
        validate_bundle(BundleData.from_matrices([[[0.0, 0.0], [0.0, 0.0]]], [[1.0, 0.0], [0.0, 0.0]], [(-1.0, 1.0)]))
    with pytest.raises(InvariantViolation):
        PathData.from_exprs([ex.variable("x1")])

    broken_loop = PathData.from_exprs([ex.T, ex.ZERO], period=1.0)
    with pytest.raises(InvariantViolation):
        validate_path(broken_loop)

    far = straight_path([0.0, 0.0], [10.0, 0.0])
    with pytest.raises(DomainExitError):
        parallel_transport(flat_bundle(2, 2), far, 0.0, 1.0)


def main():
    print("🚀 Bundle tests")
    test_pullback_coefficient_on_unit_circle()
    test_half_turn_transport_is_minus_identity()
    test_compatibility_residual()
    print("📊 done")


if __name__ == "__main__":
    main()
