"""
Test the classification pipeline: preflight, connection and form extraction, round trip
"""

import sys
import os

# Add the parent directory to Python path to import backend modules
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from bordism import Bordism, right_elbow, standard
from bundle import flat_bundle, gauge_transform
from classifier import (
    FieldTheoryClassifier, FieldTheoryOracle, OracleEvaluator, ReconstructedBundle, extract_beta,
    reconstruct_connection,
)
from field_theory import evaluate, make_tft
from geometry.errors import ClassificationError
from sample_data import (
    ROTATION, constant_rotation_bundle, random_compatible_bundle, random_gauge, random_path,
)
from verification import CompositionBugOracle, ZeroTransportOracle


def test_flat_oracle_has_zero_connection():
    print("🧪 Testing connection reconstruction...")
    oracle = FieldTheoryOracle(flat_bundle(2, 2))
    for v in np.eye(2):
        omega = reconstruct_connection(oracle, [0.3, -0.4], v, 1e-4)
        assert np.linalg.norm(omega) < 1e-12


def test_rotation_oracle_recovers_generator():
    """omega_1 = C is recovered within 1e-7 at h = 1e-4"""
    oracle = FieldTheoryOracle(constant_rotation_bundle())
    omega_1 = reconstruct_connection(oracle, [0.5, 0.5], [1.0, 0.0], 1e-4)
    omega_2 = reconstruct_connection(oracle, [0.5, 0.5], [0.0, 1.0], 1e-4)
    assert np.linalg.norm(omega_1 - ROTATION) < 1e-7
    assert np.linalg.norm(omega_2) < 1e-7
    print("✅ rotation generator recovered")


def test_central_difference_is_second_order():
    """Halving h divides the error by about four"""
    oracle = FieldTheoryOracle(constant_rotation_bundle())
    classifier = FieldTheoryClassifier(seed=0)
    report = classifier.reconstruction_error(oracle, constant_rotation_bundle(), per_axis=2,
                                             steps=(2e-2, 1e-2, 5e-3))
    errors = report.connection_errors
    for coarse, fine in zip(errors, errors[1:]):
        assert 3.5 <= coarse / fine <= 4.5
    assert all(1.8 <= p <= 2.2 for p in report.order_estimates)
    assert report.fitted_order == pytest.approx(2.0, abs=0.2)


def test_step_below_noise_floor_is_rejected():
    oracle = FieldTheoryOracle(flat_bundle(2, 2))
    with pytest.raises(ClassificationError):
        reconstruct_connection(oracle, [0.0, 0.0], [1.0, 0.0], 1e-10)


def test_extract_beta():
    print("🧪 Testing form extraction...")
    B, signs = extract_beta(FieldTheoryOracle(flat_bundle(2, 2)), [0.0, 0.0])
    assert np.allclose(B, np.eye(2))
    assert list(signs) == [1.0, 1.0]

    B, signs = extract_beta(FieldTheoryOracle(flat_bundle(2, 2, beta=np.diag([1.0, -1.0]))), [0.0, 0.0])
    assert np.allclose(B, np.diag([1.0, -1.0]))
    assert list(signs) == [1.0, -1.0]
    print("✅ signatures (+, +) and (+, -)")


def test_preflight_accepts_valid_oracle():
    rng = np.random.default_rng(0)
    report = FieldTheoryClassifier(seed=1).preflight(FieldTheoryOracle(random_compatible_bundle(rng)))
    assert report.passed
    assert report.violations == []


def test_preflight_rejects_defective_oracles():
    """Each defective oracle is rejected with the hypothesis it violates"""
    print("🧪 Testing preflight on defective oracles...")
    rng = np.random.default_rng(2)
    classifier = FieldTheoryClassifier(seed=3)

    zero = classifier.preflight(ZeroTransportOracle(random_compatible_bundle(rng)))
    assert not zero.passed
    assert zero.violations[0].startswith("constant paths map to the identity")

    squared = classifier.preflight(CompositionBugOracle(random_compatible_bundle(rng, rank=3)))
    assert not squared.passed
    assert any(v.startswith("multiplicativity (split") for v in squared.violations)

    with pytest.raises(ClassificationError):
        classifier.roundtrip(ZeroTransportOracle(random_compatible_bundle(rng)), [])
    print("✅ defective oracles rejected")


def test_oracle_evaluator_matches_functor():
    rng = np.random.default_rng(4)
    bundle = random_compatible_bundle(rng, indefinite=True)
    oracle = FieldTheoryOracle(bundle)
    bordism = Bordism.of(right_elbow(random_path(rng), 0.2, 0.8))
    expected = evaluate(make_tft(bundle), bordism).value
    assert np.linalg.norm(OracleEvaluator(oracle).evaluate(bordism).value - expected) < 1e-8


def test_reconstructed_bundle_form():
    oracle = FieldTheoryOracle(flat_bundle(2, 2, beta=np.diag([2.0, 3.0])))
    reconstructed = ReconstructedBundle(oracle)
    assert np.allclose(reconstructed.form_at([0.1, 0.2]), np.diag([2.0, 3.0]))
    assert np.allclose(reconstructed.form_derivative_at([0.1, 0.2]), 0.0)

    oriented = ReconstructedBundle(FieldTheoryOracle(flat_bundle(2, 2), oriented=True))
    with pytest.raises(ClassificationError):
        oriented.form_at([0.0, 0.0])


class CountingOracle(FieldTheoryOracle):
    """Honest oracle that counts its transport queries"""

    def __init__(self, bundle):
        super().__init__(bundle)
        self.transports = 0

    def transport(self, path, a, b, s=0.0):
        self.transports += 1
        return super().transport(path, a, b, s)


class FlippingFormOracle(FieldTheoryOracle):
    """Elbow pairing whose second direction changes sign across x1 = 0"""

    def right_elbow(self, x):
        return np.diag([1.0, 1.0 if x[0] < 0.0 else -1.0])


def test_reconstructed_connection_is_read_from_nodes():
    """Oracle queries happen once per node; other points are interpolated"""
    rng = np.random.default_rng(8)
    bundle = random_compatible_bundle(rng)
    oracle = CountingOracle(bundle)
    reconstructed = ReconstructedBundle(oracle, nodes=4)
    for x in rng.uniform(-1.9, 1.9, size=(50, 2)):
        assert np.linalg.norm(reconstructed.connection_at(x) - bundle.connection_at(x)) < 1e-7
    assert oracle.transports == 4 * 4 * 2 * 2

    with pytest.raises(ClassificationError):
        ReconstructedBundle(oracle, nodes=3)


def test_signature_flip_is_rejected():
    oracle = FlippingFormOracle(flat_bundle(2, 2))
    with pytest.raises(ClassificationError) as info:
        FieldTheoryClassifier(seed=9).roundtrip(oracle, [], per_axis=2)
    assert "signature" in str(info.value)


def test_small_roundtrip():
    """Reconstruct from the oracle and compare an interval and an elbow"""
    print("🧪 Testing the classification round trip...")
    rng = np.random.default_rng(5)
    oracle = FieldTheoryOracle(random_compatible_bundle(rng))
    samples = [
        Bordism.of(standard(random_path(rng), [0.0, 1.0])),
        Bordism.of(right_elbow(random_path(rng), 0.2, 0.8)),
    ]
    report = FieldTheoryClassifier(seed=5).roundtrip(oracle, samples, per_axis=2)
    assert report.passed
    assert report.max_deviation <= 1e-6
    assert report.signature == [1, 1]
    assert len(report.deviations) == 2
    print(f"✅ round trip deviation {report.max_deviation:.3e}")


def test_gauge_consistency():
    rng = np.random.default_rng(6)
    bundle = random_compatible_bundle(rng)
    alpha = random_gauge(rng, 2)
    first = FieldTheoryOracle(bundle)
    second = FieldTheoryOracle(gauge_transform(bundle, alpha))
    samples = [Bordism.of(standard(random_path(rng), [0.0, 1.0]))]
    report = FieldTheoryClassifier(seed=6).gauge_consistency(first, second, alpha, samples, per_axis=2)
    assert report.passed


def main():
    print("🚀 Classifier tests")
    test_flat_oracle_has_zero_connection()
    test_rotation_oracle_recovers_generator()
    test_extract_beta()
    test_preflight_rejects_defective_oracles()
    print("📊 done")


if __name__ == "__main__":
    main()
