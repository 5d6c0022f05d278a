"""
Acceptance Suite
Every identity of the forward functor and the classification pipeline,
checked numerically on seeded random data
"""

import logging
import time
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from bordism import (
    BlendPartition, Bordism, ModificationKind, cut_rescale, glue_family, insert_sitting_instants,
    right_elbow, standard,
)
from bundle import (
    PathData, check_compatibility, constant_path, flat_bundle, parallel_transport, reparametrize, straight_path,
)
from classifier import FieldTheoryClassifier, FieldTheoryOracle, extract_beta
from field_theory import FieldTheoryEvaluator, TFTData, make_tft
from geometry import expressions as ex
from geometry.errors import ClassificationError
from geometry.schemas import CriterionResult
from sample_data import (
    DEFAULT_DOMAIN, incompatible_bundle, random_bordisms, random_bundle, random_compatible_bundle,
    random_increasing_map, random_loop, random_modification, random_path, sample_points,
)

logger = logging.getLogger(__name__)


class ZeroTransportOracle(FieldTheoryOracle):
    """Defective oracle: intervals longer than 0.5 are sent to the zero matrix"""

    def transport(self, path, a, b, s=0.0):
        if abs(b - a) > 0.5:
            return np.zeros((self.rank, self.rank))
        return super().transport(path, a, b, s)


class CompositionBugOracle(FieldTheoryOracle):
    """Defective oracle: answers P(gamma) P(gamma) instead of P(gamma)"""

    def transport(self, path, a, b, s=0.0):
        P = super().transport(path, a, b, s)
        return P @ P


def frobenius(A: np.ndarray, B: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(A) - np.asarray(B), "fro"))


class AcceptanceSuite:
    """
    Runs the acceptance criteria; each returns one CriterionResult row
    """

    def __init__(self, seed: int = 0):
        self.seed = seed

        # Case counts
        self.MULTIPLICATIVITY_CASES = 50
        self.REPARAMETRIZATION_CASES = 30
        self.MODIFICATION_CASES = 30
        self.SNAKE_CASES = 20
        self.SWAP_CASES = 20
        self.ROUNDTRIP_SAMPLES = 20

        # Tolerances
        self.TRANSPORT_TOL = 1e-8
        self.EXACT_TOL = 1e-12
        self.SYMMETRY_TOL = 1e-9
        self.GLUE_TOL = 1e-9
        self.ROUNDTRIP_TOL = 1e-6
        self.NEGATIVE_MARGIN = 1e-3

        self.criteria: Dict[int, Callable[[np.random.Generator], CriterionResult]] = {
            1: self.transport_multiplicativity,
            2: self.constant_paths,
            3: self.reparametrization_invariance,
            4: self.modification_independence,
            5: self.snake_identity,
            6: self.circle_values,
            7: self.elbow_swap_symmetry,
            8: self.connection_reconstruction,
            9: self.roundtrip_classification,
            10: self.thin_bordisms,
            11: self.family_gluing,
            12: self.negative_controls,
        }

    def run(self, selection: Optional[Sequence[int]] = None) -> List[CriterionResult]:
        """Run the selected criteria (all by default) in numerical order, each with its own seeded stream"""
        results = []
        for number in sorted(selection or self.criteria):
            rng = np.random.default_rng([self.seed, number])
            started = time.perf_counter()
            result = self.criteria[number](rng)
            result.seconds = time.perf_counter() - started
            status = "PASS" if result.passed else "FAIL"
            logger.info(f"criterion {number} ({result.name}): {status}, residual {result.max_residual:.3e}, "
                        f"{result.seconds:.1f}s")
            results.append(result)
        return results

    def _bundles(self, rng: np.random.Generator, count: int, compatible_only: bool = True):
        bundles = []
        for k in range(count):
            if compatible_only or k % 2 == 0:
                bundles.append(random_compatible_bundle(rng, indefinite=bool(k % 2)))
            else:
                bundles.append(random_bundle(rng))
        return bundles

    def _result(self, number: int, name: str, residuals: Sequence[float], tolerance: float,
                detail: str = "", passed: Optional[bool] = None) -> CriterionResult:
        worst = max(residuals) if residuals else 0.0
        return CriterionResult(
            criterion=number,
            name=name,
            cases=len(residuals),
            max_residual=worst,
            tolerance=tolerance,
            passed=worst <= tolerance if passed is None else passed,
            detail=detail,
        )

    # 1-4: transports

    def transport_multiplicativity(self, rng: np.random.Generator) -> CriterionResult:
        residuals = []
        bundles = self._bundles(rng, 5, compatible_only=False)
        for k in range(self.MULTIPLICATIVITY_CASES):
            bundle = bundles[k % len(bundles)]
            path = random_path(rng, bundle.domain)
            a = float(rng.uniform(0.05, 0.95))
            whole = parallel_transport(bundle, path, 0.0, 1.0)
            first = parallel_transport(bundle, cut_rescale(path, 0.0, a), 0.0, 1.0)
            second = parallel_transport(bundle, cut_rescale(path, a, 1.0), 0.0, 1.0)
            residuals.append(frobenius(second @ first, whole))
        return self._result(1, "transport multiplicativity", residuals, self.TRANSPORT_TOL)

    def constant_paths(self, rng: np.random.Generator) -> CriterionResult:
        residuals = []
        for bundle in self._bundles(rng, 4, compatible_only=False):
            for x in sample_points(rng, bundle.domain, 5):
                P = parallel_transport(bundle, constant_path(x), 0.0, 1.0)
                residuals.append(frobenius(P, np.eye(bundle.rank)))
        return self._result(2, "constant paths map to the identity", residuals, self.EXACT_TOL)

    def reparametrization_invariance(self, rng: np.random.Generator) -> CriterionResult:
        residuals = []
        bundles = self._bundles(rng, 3, compatible_only=False)
        for k in range(self.REPARAMETRIZATION_CASES):
            bundle = bundles[k % len(bundles)]
            path = random_path(rng, bundle.domain)
            F = random_increasing_map(rng)
            a, b = sorted(rng.uniform(0.0, 1.0, 2).tolist())
            Fa, Fb = ex.evaluate(F, {"t": a}), ex.evaluate(F, {"t": b})
            moved = parallel_transport(bundle, reparametrize(path, F), a, b)
            residuals.append(frobenius(moved, parallel_transport(bundle, path, Fa, Fb)))
        return self._result(3, "reparametrization invariance", residuals, self.TRANSPORT_TOL)

    def modification_independence(self, rng: np.random.Generator) -> CriterionResult:
        residuals = []
        bundles = self._bundles(rng, 3)
        kinds = list(ModificationKind)
        for k in range(self.MODIFICATION_CASES):
            bundle = bundles[k % len(bundles)]
            path = random_path(rng, bundle.domain)
            kind = kinds[k % len(kinds)]
            chis = [random_modification(rng, kind, 0.0, 1.0) for _ in range(2)]
            first, second = (parallel_transport(bundle, path.with_reparametrization(chi), 0.0, 1.0) for chi in chis)
            residuals.append(frobenius(first, second))

        sitting = []
        for bundle in bundles:
            evaluator = FieldTheoryEvaluator(make_tft(bundle))
            taus = sorted(rng.uniform(0.0, 1.0, 3).tolist())
            bordism = Bordism.of(standard(random_path(rng, bundle.domain), taus))
            before = evaluator.evaluate(bordism).value
            after = evaluator.evaluate(insert_sitting_instants(bordism)).value
            sitting.append(frobenius(before, after))
        return self._result(
            4, "modification independence", residuals + sitting, self.TRANSPORT_TOL,
            detail=f"sitting-instant insertion max {max(sitting):.1e}",
        )

    # 5-7: elbows and circles

    def snake_identity(self, rng: np.random.Generator) -> CriterionResult:
        constant_residuals, residuals = [], []
        for k, bundle in enumerate(self._bundles(rng, self.SNAKE_CASES)):
            evaluator = FieldTheoryEvaluator(make_tft(bundle))
            if k < 5:
                x = sample_points(rng, bundle.domain, 1)[0]
                constant_residuals.append(evaluator.snake_check(constant_path(x), 0.0, 1.0))
            residuals.append(evaluator.snake_check(random_path(rng, bundle.domain), 0.0, 1.0))
        constant_ok = max(constant_residuals) <= self.EXACT_TOL
        return self._result(
            5, "snake identity", constant_residuals + residuals, self.TRANSPORT_TOL,
            detail=f"constant elbows max {max(constant_residuals):.1e} (tolerance {self.EXACT_TOL:.0e})",
            passed=constant_ok and max(residuals) <= self.TRANSPORT_TOL,
        )

    def circle_values(self, rng: np.random.Generator) -> CriterionResult:
        flat_residuals = []
        for rank in (1, 2, 3):
            evaluator = FieldTheoryEvaluator(make_tft(flat_bundle(rank, 2)))
            flat_residuals.append(abs(evaluator.circle_value(random_loop(rng, DEFAULT_DOMAIN)) - rank))

        reversal, traces = [], []
        for bundle in self._bundles(rng, 4):
            evaluator = FieldTheoryEvaluator(make_tft(bundle))
            reversal.append(evaluator.reversal_residual(random_loop(rng, bundle.domain)))
            x = sample_points(rng, bundle.domain, 1)[0]
            traces.append(abs(evaluator.beta_tau_trace(x) - bundle.rank))
        exact_ok = max(flat_residuals + traces) <= self.EXACT_TOL
        return self._result(
            6, "circle values", flat_residuals + traces + reversal, self.TRANSPORT_TOL,
            detail=f"flat trace and beta-tau max {max(flat_residuals + traces):.1e}, reversal max {max(reversal):.1e}",
            passed=exact_ok and max(reversal) <= self.TRANSPORT_TOL,
        )

    def elbow_swap_symmetry(self, rng: np.random.Generator) -> CriterionResult:
        asymmetry, swaps = [], []
        for bundle in self._bundles(rng, self.SWAP_CASES):
            oracle = FieldTheoryOracle(bundle)
            x = sample_points(rng, bundle.domain, 1)[0]
            B, _ = extract_beta(oracle, x, symmetry_tol=self.SYMMETRY_TOL)
            asymmetry.append(float(np.max(np.abs(B - B.T))))
            if len(swaps) < 5:
                evaluator = FieldTheoryEvaluator(oracle.tft)
                swaps.append(evaluator.elbow_swap_check(random_path(rng, bundle.domain), 0.2, 0.8))
        return self._result(
            7, "elbow swap symmetry", asymmetry, self.SYMMETRY_TOL,
            detail=f"swapped-path elbows max {max(swaps):.1e}",
            passed=max(asymmetry) <= self.SYMMETRY_TOL and max(swaps) <= self.TRANSPORT_TOL,
        )

    # 8-9: classification

    def connection_reconstruction(self, rng: np.random.Generator) -> CriterionResult:
        classifier = FieldTheoryClassifier(self.seed)
        bundle = random_compatible_bundle(rng)
        report = classifier.reconstruction_error(FieldTheoryOracle(bundle), bundle, per_axis=4)
        orders = ", ".join(f"{p:.2f}" for p in report.order_estimates)
        return self._result(
            8, "connection reconstruction", report.connection_errors, report.tolerance,
            detail=f"orders {orders} over h = {', '.join(f'{h:.0e}' for h in report.steps)}",
            passed=report.passed,
        )

    def roundtrip_classification(self, rng: np.random.Generator) -> CriterionResult:
        classifier = FieldTheoryClassifier(self.seed)
        bundle = random_compatible_bundle(rng)
        deviations, notes, passed = [], [], True
        for oriented in (False, True):
            samples = random_bordisms(rng, bundle.domain, self.ROUNDTRIP_SAMPLES, oriented=oriented)
            try:
                report = classifier.roundtrip(FieldTheoryOracle(bundle, oriented=oriented), samples, per_axis=2)
            except ClassificationError as e:
                notes.append(f"{'oriented' if oriented else 'unoriented'}: {e}")
                passed = False
                continue
            deviations.append(report.max_deviation)
            passed = passed and report.passed
            notes.append(f"{'oriented' if oriented else 'unoriented'} {report.max_deviation:.1e}")
        return self._result(9, "round-trip classification", deviations, self.ROUNDTRIP_TOL,
                            detail="; ".join(notes), passed=passed)

    # 10-12: thin bordisms, families, negative controls

    def thin_bordisms(self, rng: np.random.Generator) -> CriterionResult:
        thin, segal = [], []
        for bundle in self._bundles(rng, 4):
            evaluator = FieldTheoryEvaluator(make_tft(bundle))
            path = random_path(rng, bundle.domain)
            tau = float(rng.uniform(0.0, 1.0))
            value = evaluator.evaluate(Bordism.of(standard(path, [tau, tau]))).value
            thin.append(frobenius(value, np.eye(bundle.rank)))
            taus = sorted(rng.uniform(0.0, 1.0, 3).tolist())
            segal.append(evaluator.segal_residual(Bordism.of(standard(path, taus))))
        return self._result(
            10, "thin bordisms and Segal maps", thin + segal, self.TRANSPORT_TOL,
            detail=f"thin max {max(thin):.1e} (tolerance {self.EXACT_TOL:.0e}), Segal max {max(segal):.1e}",
            passed=max(thin) <= self.EXACT_TOL and max(segal) <= self.TRANSPORT_TOL,
        )

    def family_gluing(self, rng: np.random.Generator) -> CriterionResult:
        residuals = []
        for bundle in self._bundles(rng, 2):
            evaluator = FieldTheoryEvaluator(make_tft(bundle))
            base = random_path(rng, bundle.domain)
            drift = ex.multiply(ex.constant(float(rng.uniform(-0.2, 0.2))), ex.S)
            # family gamma(t, s) = base(t) + drift in the first coordinate
            components = (ex.add(base.components[0], ex.multiply(drift, ex.sin(ex.T))),) + base.components[1:]
            stretch, shift = float(rng.uniform(0.1, 0.4)), float(rng.uniform(-0.2, 0.2))
            # second chart u = F(t, s) = t (1 + c s) + d s
            overlap = ex.add(ex.multiply(ex.T, ex.add(ex.ONE, ex.multiply(ex.constant(stretch), ex.S))),
                             ex.multiply(ex.constant(shift), ex.S))
            inverse = ex.divide(ex.subtract(ex.T, ex.multiply(ex.constant(shift), ex.S)),
                                ex.add(ex.ONE, ex.multiply(ex.constant(stretch), ex.S)))
            taus = [ex.add(ex.constant(0.1), ex.multiply(ex.constant(0.1), ex.S)), ex.constant(0.9)]

            grid1 = tuple(np.linspace(0.0, 0.6, 4).tolist())
            grid2 = tuple(np.linspace(0.4, 1.0, 4).tolist())
            first = Bordism.of(standard(PathData(components, grid=grid1), taus), grid=grid1)
            second_components = tuple(ex.substitute(c, {"t": inverse}) for c in components)
            second_taus = [ex.substitute(overlap, {"t": tau}) for tau in taus]
            second = Bordism.of(standard(PathData(second_components, grid=grid2), second_taus), grid=grid2)

            glued = glue_family(first, second, overlap, BlendPartition(0.4, 0.6))
            report = evaluator.compare_gluing(first, second, glued)
            residuals.append(report.max_deviation)
        return self._result(11, "family gluing", residuals, self.GLUE_TOL)

    def negative_controls(self, rng: np.random.Generator) -> CriterionResult:
        notes, passed = [], True
        bundle = incompatible_bundle()
        compatibility = check_compatibility(bundle).max_residual
        notes.append(f"compatibility residual {compatibility:.2e}")
        passed = passed and compatibility >= self.NEGATIVE_MARGIN

        evaluator = FieldTheoryEvaluator(TFTData(bundle))
        line = straight_path([0.0] * bundle.dim, [1.0] + [0.0] * (bundle.dim - 1))
        drift = evaluator.elbow_midpoint_invariance(right_elbow(line, -0.5, 0.5), -0.2, 0.3)
        notes.append(f"elbow midpoint drift {drift:.2e}")
        passed = passed and drift >= self.NEGATIVE_MARGIN

        classifier = FieldTheoryClassifier(self.seed)
        for oracle, expected in (
            (ZeroTransportOracle(random_compatible_bundle(rng)), "invertibility"),
            (CompositionBugOracle(random_compatible_bundle(rng, rank=3)), "multiplicativity"),
        ):
            report = classifier.preflight(oracle)
            named = any(v.startswith(expected) for v in report.violations)
            notes.append(f"{type(oracle).__name__}: {', '.join(report.violations) or 'no violation'}")
            passed = passed and not report.passed and named
        return self._result(12, "negative controls", [compatibility, drift], self.NEGATIVE_MARGIN,
                            detail="; ".join(notes), passed=passed)
