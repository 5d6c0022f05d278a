"""
Field Theory Classifier
Reconstructs (V, nabla, beta) from a black-box field theory and verifies the round trip

The oracle answers exactly the queries classification consumes: the rank at
the universal point, transports along paths, constant elbows and circles.
"""

import logging
import math
from abc import ABC, abstractmethod
from functools import cached_property
from typing import List, Sequence, Tuple

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from bordism import Bordism, circle, cut_rescale, interval_modification, left_elbow, right_elbow, standard
from bundle import PathData, check_compatibility, constant_path, straight_path
from field_theory import BordismEvaluator, FieldTheoryEvaluator, TFTData, gauge_action, make_tft
from geometry import settings
from geometry.errors import AsymmetryError, ClassificationError, DomainExitError, FieldTheoryError, SingularMatrixError
from geometry.linalg import check_symmetric, checked_inverse, convergence_order, indefinite_orthonormalize
from geometry.schemas import PreflightReport, ReconstructionReport, ResidualReport
from sample_data import random_path

logger = logging.getLogger(__name__)


class TFTOracle(ABC):
    """Query interface of a 1-dimensional field theory over a box in R^m"""

    rank: int
    dim: int
    domain: Tuple[Tuple[float, float], ...]
    oriented: bool = False

    @abstractmethod
    def transport(self, path: PathData, a: float, b: float, s: float = 0.0) -> np.ndarray:
        """Value of the interval (gamma; a, b), a <= b"""

    @abstractmethod
    def right_elbow(self, x: Sequence[float]) -> np.ndarray:
        """Constant right elbow at x as an n x n matrix"""

    @abstractmethod
    def left_elbow(self, x: Sequence[float]) -> np.ndarray:
        """Constant left elbow at x as an n x n matrix"""

    @abstractmethod
    def circle(self, loop: PathData, s: float = 0.0) -> float:
        """Value of the circle traced by a periodic loop"""

    def contains(self, x: Sequence[float], slack: float = 1e-9) -> bool:
        return all(lo - slack <= xi <= hi + slack for xi, (lo, hi) in zip(x, self.domain))


class FieldTheoryOracle(TFTOracle):
    """Oracle answering through the forward functor of a bundle"""

    def __init__(self, bundle, oriented: bool = False, check: bool = True):
        self.tft = make_tft(bundle, oriented, check)
        self.rank = bundle.rank
        self.dim = bundle.dim
        self.domain = tuple(bundle.domain)
        self.oriented = oriented
        self._evaluator = FieldTheoryEvaluator(self.tft)

    def transport(self, path, a, b, s=0.0):
        if a > b:
            return checked_inverse(self.transport(path, b, a, s), what="oracle transport")
        component = standard(path, [a, b], oriented=self.oriented)
        return self._evaluator.component_value(component, s, oriented=self.oriented)[2]

    def right_elbow(self, x):
        elbow = right_elbow(constant_path(x), 0.0, 1.0, oriented=self.oriented)
        return self._evaluator.component_value(elbow, oriented=self.oriented)[2].reshape(self.rank, self.rank)

    def left_elbow(self, x):
        elbow = left_elbow(constant_path(x), 0.0, 1.0, oriented=self.oriented)
        return self._evaluator.component_value(elbow, oriented=self.oriented)[2].reshape(self.rank, self.rank)

    def circle(self, loop, s=0.0):
        return float(self._evaluator.component_value(circle(loop, oriented=self.oriented), s,
                                                     oriented=self.oriented)[2][0, 0])


class OracleEvaluator(BordismEvaluator):
    """
    Evaluates arbitrary sample bordisms from oracle queries alone: intervals
    directly, elbows as a constant elbow conjugated by two transports
    """

    def __init__(self, oracle: TFTOracle):
        super().__init__(oracle.rank, oracle.oriented)
        self.oracle = oracle

    def transport(self, path, a, b, s=0.0):
        if a > b:
            return checked_inverse(self.oracle.transport(path, b, a, s), what="oracle transport")
        return self.oracle.transport(path, a, b, s)

    def pairing(self, x):
        return self.oracle.right_elbow(x)

    def copairing(self, x):
        return self.oracle.left_elbow(x)

    def circle_value(self, loop, s=0.0):
        return self.oracle.circle(loop, s)


def query_path(x: Sequence[float], v: Sequence[float], h: float) -> PathData:
    """Straight line t -> x + t v with sitting instants at 0 and h"""
    return straight_path(x, v).with_reparametrization(interval_modification(0.0, float(h)))


def reconstruct_connection(oracle: TFTOracle, x: Sequence[float], v: Sequence[float], h: float,
                           min_step: float = 1e-8) -> np.ndarray:
    """
    omega(x)(v) ~ (P(x -> x - h v) - P(x -> x + h v)) / (2h)

    Both queries are forward transports along straight lines, so the estimate
    is a central difference with O(h^2) truncation error.
    """
    if h < min_step:
        raise ClassificationError(f"finite-difference step {h:.1e} is below the noise floor {min_step:.0e}")
    x, v = np.asarray(x, dtype=float), np.asarray(v, dtype=float)
    for sign in (1.0, -1.0):
        end = x + sign * h * v
        if not oracle.contains(end):
            raise DomainExitError(sign * h, end)
    try:
        forward = oracle.transport(query_path(x, v, h), 0.0, h)
        backward = oracle.transport(query_path(x, -v, h), 0.0, h)
    except FieldTheoryError as e:
        raise ClassificationError(f"oracle transport query failed at {tuple(x)}: {e}") from e
    return (backward - forward) / (2.0 * h)


def extract_beta(oracle: TFTOracle, x: Sequence[float], symmetry_tol: float = 1e-9,
                 det_tol: float = 1e-8) -> Tuple[np.ndarray, np.ndarray]:
    """beta(x) from the constant right elbow, with its signs from a generalized orthonormal basis"""
    B = np.asarray(oracle.right_elbow(x), dtype=float)
    try:
        check_symmetric(B, symmetry_tol, what=f"elbow at {tuple(x)}")
        _, signs = indefinite_orthonormalize(B, det_tol)
    except AsymmetryError as e:
        raise ClassificationError(f"oracle is not a valid unoriented field theory: {e}") from e
    except SingularMatrixError as e:
        raise ClassificationError(f"elbow pairing must be nondegenerate: {e}") from e
    return B, signs


class ReconstructedBundle:
    """
    Bundle whose connection and form are recovered from oracle queries;
    usable wherever a bundle is transported

    omega and beta are reconstructed once on a tensor grid of `nodes` points
    per axis, set 2h inside the domain, and read between nodes through
    tensor-product cubic splines. Fields of degree at most three in each
    coordinate are reproduced exactly; smooth fields converge as spacing^4.
    """

    def __init__(self, oracle: TFTOracle, h: float = None, min_step: float = 1e-8, nodes: int = 6):
        if nodes < 4:
            raise ClassificationError(f"cubic interpolation needs at least 4 nodes per axis, got {nodes}")
        self.oracle = oracle
        self.rank = oracle.rank
        self.dim = oracle.dim
        self.domain = tuple(oracle.domain)
        self.compatible = False
        self.h = settings.FD_STEP if h is None else h
        self.min_step = min_step
        self.nodes = nodes
        self.signature = None

    def contains(self, x, slack: float = 1e-9) -> bool:
        return self.oracle.contains(x, slack)

    @property
    def axes(self) -> List[np.ndarray]:
        inset = 2.0 * self.h
        return [np.linspace(lo + inset, hi - inset, self.nodes) for lo, hi in self.domain]

    def _interpolator(self, values: List[np.ndarray], shape: Tuple[int, ...]) -> RegularGridInterpolator:
        table = np.array(values).reshape(tuple(self.nodes for _ in self.domain) + shape)
        return RegularGridInterpolator(tuple(self.axes), table, method="cubic", bounds_error=False, fill_value=None)

    @cached_property
    def _omega(self) -> RegularGridInterpolator:
        directions = np.eye(self.dim)
        values = [
            np.array([reconstruct_connection(self.oracle, x, directions[mu], self.h, self.min_step)
                      for mu in range(self.dim)])
            for x in self.node_grid()
        ]
        logger.debug(f"connection reconstructed on {len(values)} nodes")
        return self._interpolator(values, (self.dim, self.rank, self.rank))

    @cached_property
    def _beta(self) -> RegularGridInterpolator:
        values, signature = [], None
        for x in self.node_grid():
            B, signs = extract_beta(self.oracle, x)
            signs = [int(v) for v in signs]
            if signature is not None and signs != signature:
                raise ClassificationError(
                    f"signature of the elbow pairing changes from {signature} to {signs} at {tuple(x)}")
            signature = signs
            values.append(B)
        self.signature = signature
        return self._interpolator(values, (self.rank, self.rank))

    def connection_at(self, x) -> np.ndarray:
        return self._omega(np.atleast_2d(np.asarray(x, dtype=float)))[0]

    def form_at(self, x) -> np.ndarray:
        if self.oracle.oriented:
            raise ClassificationError("an oriented field theory carries no bilinear form")
        return self._beta(np.atleast_2d(np.asarray(x, dtype=float)))[0]

    def form_derivative_at(self, x) -> np.ndarray:
        """Central differences of the interpolated elbow pairing along the coordinate axes"""
        x = np.asarray(x, dtype=float)
        axes = np.eye(self.dim) * self.h
        return np.array([
            (self.form_at(x + axes[mu]) - self.form_at(x - axes[mu])) / (2.0 * self.h) for mu in range(self.dim)
        ])

    def node_grid(self) -> np.ndarray:
        return np.array(np.meshgrid(*self.axes, indexing="ij")).reshape(self.dim, -1).T

    def sample_grid(self, per_axis: int = 5, margin: float = 0.0) -> np.ndarray:
        axes = [np.linspace(lo + margin, hi - margin, per_axis) for lo, hi in self.domain]
        return np.array(np.meshgrid(*axes, indexing="ij")).reshape(self.dim, -1).T


class FieldTheoryClassifier:
    """
    Classification pipeline: preflight, reconstruction of the connection
    and form, and the round trip through the forward functor
    """

    def __init__(self, seed: int = None):
        self.seed = settings.DEFAULT_SEED if seed is None else seed

        # Acceptance thresholds
        self.ROUNDTRIP_TOL = 1e-6
        self.SYMMETRY_TOL = 1e-9
        self.DET_TOL = 1e-8
        self.MIN_STEP = 1e-8
        self.IDENTITY_TOL = 1e-12
        self.MULTIPLICATIVITY_TOL = 1e-8
        self.INVERTIBILITY_TOL = 1e-8
        self.CONNECTION_TOL = 1e-6
        self.GAUGE_TOL = 1e-6

        # Finite-difference schedule
        self.FD_STEP = settings.FD_STEP
        self.STEPS = (2e-4, 1e-4, 5e-5)
        self.ORDER_BAND = (1.8, 2.2)
        self.PREFLIGHT_SPLITS = 20
        self.GRID_MARGIN = 0.25
        self.INTERPOLATION_NODES = 6

    def _grid(self, oracle: TFTOracle, per_axis: int) -> np.ndarray:
        axes = [np.linspace(lo + self.GRID_MARGIN, hi - self.GRID_MARGIN, per_axis) for lo, hi in oracle.domain]
        return np.array(np.meshgrid(*axes, indexing="ij")).reshape(oracle.dim, -1).T

    def reconstruct_connection(self, oracle: TFTOracle, x, v, h: float = None) -> np.ndarray:
        return reconstruct_connection(oracle, x, v, self.FD_STEP if h is None else h, self.MIN_STEP)

    def extract_beta(self, oracle: TFTOracle, x) -> Tuple[np.ndarray, np.ndarray]:
        return extract_beta(oracle, x, self.SYMMETRY_TOL, self.DET_TOL)

    def preflight(self, oracle: TFTOracle) -> PreflightReport:
        """
        Constant paths to the identity, multiplicativity on random splits and
        invertibility of the sampled transports
        """
        rng = np.random.default_rng(self.seed)
        n = oracle.rank
        checks: List[ResidualReport] = []

        identity_residual = 0.0
        for x in self._grid(oracle, 3):
            P = oracle.transport(constant_path(x), 0.0, 1.0)
            identity_residual = max(identity_residual, float(np.linalg.norm(P - np.eye(n), "fro")))
        checks.append(ResidualReport(
            name="constant paths map to the identity",
            residual=identity_residual,
            tolerance=self.IDENTITY_TOL,
            passed=identity_residual <= self.IDENTITY_TOL,
        ))

        worst, worst_detail, smallest_det = 0.0, "", math.inf
        for k in range(self.PREFLIGHT_SPLITS):
            path = random_path(rng, oracle.domain)
            a = float(rng.uniform(0.1, 0.9))
            whole = oracle.transport(path, 0.0, 1.0)
            first = oracle.transport(cut_rescale(path, 0.0, a), 0.0, 1.0)
            second = oracle.transport(cut_rescale(path, a, 1.0), 0.0, 1.0)
            residual = float(np.linalg.norm(second @ first - whole, "fro"))
            if residual > worst:
                worst, worst_detail = residual, f"split a = {a:.6f} on sample path {k}"
            smallest_det = min(smallest_det, *(abs(float(np.linalg.det(P))) for P in (whole, first, second)))
        checks.append(ResidualReport(
            name="multiplicativity",
            residual=worst,
            tolerance=self.MULTIPLICATIVITY_TOL,
            passed=worst <= self.MULTIPLICATIVITY_TOL,
            detail=worst_detail,
        ))
        checks.append(ResidualReport(
            name="invertibility",
            residual=smallest_det,
            tolerance=self.INVERTIBILITY_TOL,
            passed=smallest_det > self.INVERTIBILITY_TOL,
            detail="smallest |det P| over sampled transports",
        ))

        violations = [c.name + (f" ({c.detail})" if c.detail and c.name == "multiplicativity" else "")
                      for c in checks if not c.passed]
        for violation in violations:
            logger.warning(f"preflight violation: {violation}")
        return PreflightReport(passed=not violations, checks=checks, violations=violations)

    def _connection_schedule(self, oracle: TFTOracle, x) -> List[np.ndarray]:
        axes = np.eye(oracle.dim)
        return [np.array([self.reconstruct_connection(oracle, x, axes[mu], h) for mu in range(oracle.dim)])
                for h in self.STEPS]

    def roundtrip(self, oracle: TFTOracle, samples: Sequence[Bordism], per_axis: int = 3,
                  nodes: int = None) -> ReconstructionReport:
        """
        Reconstruct the bundle, evaluate every sample through the oracle and
        through the reconstruction, and report the largest deviation
        """
        preflight = self.preflight(oracle)
        if not preflight.passed:
            raise ClassificationError(f"preflight failed: {', '.join(preflight.violations)}")

        grid = self._grid(oracle, per_axis)
        reconstructed = ReconstructedBundle(oracle, self.FD_STEP, self.MIN_STEP, nodes or self.INTERPOLATION_NODES)

        omega, pairs, orders = [], [], []
        for x in grid:
            schedule = self._connection_schedule(oracle, x)
            omega.append(reconstructed.connection_at(x).tolist())
            coarse = float(np.linalg.norm(schedule[0] - schedule[1]))
            fine = float(np.linalg.norm(schedule[1] - schedule[2]))
            pairs.append([coarse, fine])
            orders.append(math.log2(coarse / fine) if coarse > 0.0 and fine > 0.0 else float("nan"))

        beta, signature, compatibility = None, None, None
        if not oracle.oriented:
            reconstructed.form_at(grid[0])
            signature = reconstructed.signature
            beta = []
            for x in grid:
                B, signs = self.extract_beta(oracle, x)
                if [int(v) for v in signs] != signature:
                    raise ClassificationError(
                        f"signature of the elbow pairing is {signature} on the nodes but {[int(v) for v in signs]} "
                        f"at {tuple(x)}")
                beta.append(B.tolist())
            compatibility = check_compatibility(reconstructed, grid, tol=1e-5).max_residual

        expected_evaluator = OracleEvaluator(oracle)
        rebuilt_evaluator = FieldTheoryEvaluator(TFTData(reconstructed, oracle.oriented))
        deviations, kinds = [], []
        for index, bordism in enumerate(samples):
            expected = expected_evaluator.evaluate(bordism)
            rebuilt = rebuilt_evaluator.evaluate(bordism)
            deviation = max(float(np.linalg.norm(e - r, "fro")) for e, r in zip(expected.values, rebuilt.values))
            deviations.append(deviation)
            kinds.append("+".join(c.kind.value for c in bordism.components))
            logger.info(f"sample {index} ({kinds[-1]}): deviation {deviation:.3e}")

        max_deviation = max(deviations) if deviations else 0.0
        return ReconstructionReport(
            oriented=oracle.oriented,
            grid=grid.tolist(),
            fd_step=self.FD_STEP,
            steps=list(self.STEPS),
            omega=omega,
            beta=beta,
            signature=signature,
            residual_pairs=pairs,
            order_estimates=orders,
            compatibility_residual=compatibility,
            sample_kinds=kinds,
            deviations=deviations,
            max_deviation=max_deviation,
            tolerance=self.ROUNDTRIP_TOL,
            passed=max_deviation <= self.ROUNDTRIP_TOL,
            note=(f"agreement established on {len(deviations)} sampled bordisms up to the tolerance, not as an equivalence; "
                  f"fields interpolated from {reconstructed.nodes} nodes per axis"),
        )

    def reconstruction_error(self, oracle: TFTOracle, bundle_true, per_axis: int = 5,
                             steps: Sequence[float] = None) -> ReconstructionReport:
        """Sup-grid error of the reconstructed connection against the generating one, per step"""
        steps = tuple(self.STEPS if steps is None else steps)
        grid = self._grid(oracle, per_axis)
        axes = np.eye(oracle.dim)
        errors, finest = [], []
        for h in steps:
            worst = 0.0
            finest = []
            for x in grid:
                truth = bundle_true.connection_at(x)
                estimate = np.array([self.reconstruct_connection(oracle, x, axes[mu], h) for mu in range(oracle.dim)])
                finest.append(estimate.tolist())
                worst = max(worst, max(float(np.linalg.norm(estimate[mu] - truth[mu], "fro")) for mu in range(oracle.dim)))
            errors.append(worst)
            logger.info(f"connection error {worst:.3e} at h = {h:.1e}")

        pairs = [[e1, e2] for e1, e2 in zip(errors, errors[1:])]
        orders = [math.log2(e1 / e2) if e1 > 0.0 and e2 > 0.0 else float("nan") for e1, e2 in pairs]
        in_band = all(self.ORDER_BAND[0] <= p <= self.ORDER_BAND[1] for p in orders)
        return ReconstructionReport(
            oriented=oracle.oriented,
            grid=grid.tolist(),
            fd_step=steps[-1],
            steps=list(steps),
            omega=finest,
            connection_errors=errors,
            residual_pairs=pairs,
            order_estimates=orders,
            fitted_order=convergence_order(errors, steps),
            max_deviation=errors[-1],
            tolerance=self.CONNECTION_TOL,
            passed=in_band and errors[-1] <= self.CONNECTION_TOL,
            note=f"orders must lie in [{self.ORDER_BAND[0]}, {self.ORDER_BAND[1]}]",
        )

    def gauge_consistency(self, first: TFTOracle, second: TFTOracle, alpha: np.ndarray,
                          samples: Sequence[Bordism], per_axis: int = 3) -> ResidualReport:
        """
        Two oracles related by a constant gauge alpha: reconstructed connections
        satisfy omega' = alpha omega alpha^-1 and evaluations agree after
        conjugating every tensor factor
        """
        alpha = np.asarray(alpha, dtype=float)
        inverse = checked_inverse(alpha, what="gauge transformation")
        worst = 0.0
        for x in self._grid(first, per_axis):
            for mu, v in enumerate(np.eye(first.dim)):
                w1 = self.reconstruct_connection(first, x, v)
                w2 = self.reconstruct_connection(second, x, v)
                worst = max(worst, float(np.linalg.norm(w2 - alpha @ w1 @ inverse, "fro")))
            if not first.oriented:
                B1, B2 = first.right_elbow(x), second.right_elbow(x)
                worst = max(worst, float(np.linalg.norm(B2 - inverse.T @ B1 @ inverse, "fro")))

        evaluate_first, evaluate_second = OracleEvaluator(first), OracleEvaluator(second)
        for bordism in samples:
            moved = gauge_action(evaluate_first.evaluate(bordism), alpha)
            direct = evaluate_second.evaluate(bordism)
            worst = max(worst, max(float(np.linalg.norm(m - d, "fro")) for m, d in zip(moved, direct.values)))
        return ResidualReport(
            name="gauge consistency",
            residual=worst,
            tolerance=self.GAUGE_TOL,
            passed=worst <= self.GAUGE_TOL,
        )
