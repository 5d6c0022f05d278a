"""
Test the acceptance suite criteria and the defective oracles
"""

import sys
import os

# Add the parent directory to Python path to import backend modules
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from bundle import straight_path
from classifier import FieldTheoryOracle
from sample_data import random_compatible_bundle
from verification import AcceptanceSuite, CompositionBugOracle, ZeroTransportOracle, frobenius


def test_selected_criteria_pass():
    print("🧪 Running criteria 2, 6, 10 and 12...")
    results = AcceptanceSuite(seed=0).run([12, 2, 10, 6])
    assert [r.criterion for r in results] == [2, 6, 10, 12]
    for result in results:
        print(f"{'✅' if result.passed else '❌'} {result.criterion}. {result.name}: {result.max_residual:.3e}")
        assert result.passed, result.detail
        assert result.cases > 0
        assert result.seconds >= 0.0


@pytest.mark.parametrize("criterion", [1, 3, 4, 5, 7, 11])
def test_transport_and_elbow_criteria(criterion):
    """Forward-functor identities: each row passes within its tolerance"""
    [result] = AcceptanceSuite(seed=0).run([criterion])
    print(f"{'✅' if result.passed else '❌'} {result.criterion}. {result.name}: {result.max_residual:.3e}")
    assert result.criterion == criterion
    assert result.passed, result.detail
    assert result.max_residual <= result.tolerance


def test_classification_criteria():
    """Connection reconstruction converges at second order and the round trip closes"""
    print("🧪 Running criteria 8 and 9...")
    reconstruction, roundtrip = AcceptanceSuite(seed=0).run([8, 9])
    assert reconstruction.passed, reconstruction.detail
    assert reconstruction.cases == 3
    assert roundtrip.passed, roundtrip.detail
    assert roundtrip.cases == 2
    assert roundtrip.max_residual <= 1e-6
    print(f"✅ round trip {roundtrip.max_residual:.3e}")


def test_same_seed_same_residuals():
    first = AcceptanceSuite(seed=4).run([2, 10])
    second = AcceptanceSuite(seed=4).run([2, 10])
    assert [r.max_residual for r in first] == [r.max_residual for r in second]


def test_negative_control_details():
    [result] = AcceptanceSuite(seed=1).run([12])
    assert "ZeroTransportOracle" in result.detail
    assert "CompositionBugOracle" in result.detail
    assert result.max_residual >= 1e-3


def test_defective_oracles():
    rng = np.random.default_rng(0)
    bundle = random_compatible_bundle(rng)
    honest = FieldTheoryOracle(bundle)
    line = straight_path([0.0, 0.0], [0.5, 0.0])

    zero = ZeroTransportOracle(bundle)
    assert np.array_equal(zero.transport(line, 0.0, 1.0), np.zeros((2, 2)))
    assert frobenius(zero.transport(line, 0.0, 0.4), honest.transport(line, 0.0, 0.4)) == 0.0

    P = honest.transport(line, 0.0, 1.0)
    assert frobenius(CompositionBugOracle(bundle).transport(line, 0.0, 1.0), P @ P) < 1e-14


def main():
    print("🚀 Acceptance suite tests")
    test_selected_criteria_pass()
    print("📊 done")


if __name__ == "__main__":
    main()
