"""
Field Theory Evaluator
Evaluates bordisms to linear-algebra data by parallel transport

Boundary points carry R^n (label "V") or, for negatively oriented points,
its dual ("V*"). A value is a matrix from the Kronecker product of the
incoming factors to that of the outgoing factors, one per fiber.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from bordism import (
    Bordism, Component, ComponentKind, core_points, face_map, left_elbow,
    point_signs, right_elbow, standard_cuts, tensor_order,
)
from bundle import (
    PathData, check_compatibility, coevaluation, holonomy_trace, parallel_transport, reparametrize, reverse_loop,
)
from geometry import expressions as ex
from geometry.errors import InvariantViolation
from geometry.linalg import checked_inverse, kron_all, swap_matrix
from geometry.schemas import GlueReport

logger = logging.getLogger(__name__)

PRIMAL = "V"
DUAL = "V*"


@dataclass(frozen=True)
class TFTData:
    """Bundle (V, nabla, beta) and whether the oriented functor is meant"""
    bundle: object
    oriented: bool = False


def make_tft(bundle, oriented: bool = False, check: bool = True, grid=None, tol: float = 1e-9) -> TFTData:
    """
    TFTData after validating the compatibility of omega and beta, which the
    unoriented functor needs for its elbows
    """
    if check and not oriented:
        report = check_compatibility(bundle, grid, tol)
        if not report.passed:
            raise InvariantViolation(
                "compatible connection",
                f"residual {report.max_residual:.3e} > {tol:.0e} at {report.worst_point} (direction {report.worst_direction})",
            )
    return TFTData(bundle, oriented)


@dataclass(frozen=True)
class EvalResult:
    """Incoming and outgoing tensor factors plus one value per fiber"""
    domain: Tuple[str, ...]
    codomain: Tuple[str, ...]
    values: Tuple[np.ndarray, ...]
    fibers: Tuple[float, ...]

    @property
    def value(self) -> np.ndarray:
        return self.values[0]

    @property
    def is_scalar(self) -> bool:
        return not self.domain and not self.codomain

    @property
    def scalar(self) -> float:
        if not self.is_scalar:
            raise InvariantViolation("closed bordism", f"value has shape {self.value.shape}, not a scalar")
        return float(self.value[0, 0])


class BordismEvaluator:
    """
    Evaluation rules shared by the bundle-backed functor and oracle-backed
    evaluators. Subclasses supply transports, the constant elbows and
    circle values.
    """

    def __init__(self, rank: int, oriented: bool = False):
        self.rank = rank
        self.oriented = oriented

    # Primitive queries

    def transport(self, path: PathData, a: float, b: float, s: float = 0.0) -> np.ndarray:
        raise NotImplementedError

    def pairing(self, x: Sequence[float]) -> np.ndarray:
        """Matrix of the constant right elbow at x"""
        raise NotImplementedError

    def copairing(self, x: Sequence[float]) -> np.ndarray:
        """Matrix of the constant left elbow at x"""
        raise NotImplementedError

    def circle_value(self, loop: PathData, s: float = 0.0) -> float:
        raise NotImplementedError

    # Bordisms

    def evaluate(self, bordism: Bordism) -> EvalResult:
        if self.oriented:
            return self.evaluate_oriented(bordism)
        return self._evaluate(bordism)

    def evaluate_oriented(self, bordism: Bordism) -> EvalResult:
        """Positive points carry V, negative points V*; no bilinear form is used"""
        for component in bordism.components:
            if not component.oriented:
                raise InvariantViolation("orientation", f"{component.kind.value} component is not oriented")
        return self._evaluate(bordism, oriented=True)

    def _evaluate(self, bordism: Bordism, oriented: bool = False) -> EvalResult:
        fibers = tuple(bordism.fibers())
        values = []
        domain = codomain = None
        for s in fibers:
            pieces = [self.component_value(bordism.components[k], s, oriented=oriented)
                      for k in tensor_order(bordism, s)]
            fiber_domain = tuple(label for piece in pieces for label in piece[0])
            fiber_codomain = tuple(label for piece in pieces for label in piece[1])
            if domain is None:
                domain, codomain = fiber_domain, fiber_codomain
            elif (domain, codomain) != (fiber_domain, fiber_codomain):
                raise InvariantViolation("tensor bookkeeping", f"tensor factors change across the grid at s = {s:.6g}")
            values.append(kron_all([piece[2] for piece in pieces]))
        logger.debug(f"evaluated {len(bordism.components)} component(s) on {len(fibers)} fiber(s)")
        return EvalResult(domain, codomain, tuple(values), fibers)

    def _labels(self, component: Component, a: int, s: float, oriented: bool) -> Tuple[str, ...]:
        if not oriented:
            return tuple(PRIMAL for _ in core_points(component, a, s))
        return tuple(PRIMAL if sign > 0 else DUAL for sign in point_signs(component, a, s))

    def component_value(self, component: Component, s: float = 0.0, oriented: bool = False,
                        midpoint: Optional[float] = None) -> Tuple[Tuple[str, ...], Tuple[str, ...], np.ndarray]:
        """(incoming labels, outgoing labels, matrix) of one component on fiber s"""
        n = component.level
        incoming = self._labels(component, 0, s, oriented)
        outgoing = self._labels(component, n, s, oriented)

        if component.cuts.cuts[0] == component.cuts.cuts[-1]:
            return incoming, incoming, np.eye(self.rank ** len(incoming))

        kind = component.kind
        if kind == ComponentKind.standard:
            return incoming, outgoing, self._interval_value(component, s, incoming[0])
        if kind == ComponentKind.circle:
            return incoming, outgoing, np.array([[self.circle_value(component.path, s)]])
        m = 0.5 * (component.a + component.b) if midpoint is None else float(midpoint)
        if not component.a < m < component.b:
            raise InvariantViolation("elbow evaluation point", f"m = {m} must lie in ({component.a}, {component.b})")
        x = component.path.position(m, s)
        if kind == ComponentKind.right_elbow:
            C = np.eye(self.rank) if oriented else self.pairing(x)
            L_a = self._toward(component.path, component.a, m, s, incoming[0])
            L_b = self._toward(component.path, component.b, m, s, incoming[1])
            return incoming, outgoing, (L_a.T @ C @ L_b).reshape(1, -1)
        C = np.eye(self.rank) if oriented else self.copairing(x)
        M_a = self._away(component.path, m, component.a, s, outgoing[0])
        M_b = self._away(component.path, m, component.b, s, outgoing[1])
        return incoming, outgoing, (M_a @ C @ M_b.T).reshape(-1, 1)

    def _interval_value(self, component: Component, s: float, label: str) -> np.ndarray:
        taus = standard_cuts(component, s)
        value = np.eye(self.rank)
        for lo, hi in zip(taus, taus[1:]):
            P = self.transport(component.path, lo, hi, s)
            if label == DUAL:
                P = checked_inverse(P, what="interval transport").T
            value = P @ value
        return value

    def _toward(self, path: PathData, p: float, m: float, s: float, label: str) -> np.ndarray:
        """Map carrying the factor at p to the evaluation point m"""
        P = self.transport(path, p, m, s)
        return P if label == PRIMAL else checked_inverse(P, what="elbow transport").T

    def _away(self, path: PathData, m: float, p: float, s: float, label: str) -> np.ndarray:
        """Map carrying the evaluation point m to the factor at p"""
        P = self.transport(path, m, p, s)
        return P if label == PRIMAL else checked_inverse(P, what="elbow transport").T


class FieldTheoryEvaluator(BordismEvaluator):
    """
    The functor Z_{V, nabla, beta}: intervals to transports, elbows to the
    bilinear form and its inverse conjugated by transports, circles to
    holonomy traces
    """

    def __init__(self, tft: TFTData):
        super().__init__(tft.bundle.rank, tft.oriented)
        self.tft = tft
        self.bundle = tft.bundle

        # Tolerances of the identity checks
        self.SNAKE_TOL = 1e-8
        self.MIDPOINT_TOL = 1e-8
        self.GLUE_TOL = 1e-9

    def transport(self, path, a, b, s=0.0):
        return parallel_transport(self.bundle, path, a, b, s)

    def pairing(self, x):
        return self.bundle.form_at(x)

    def copairing(self, x):
        return coevaluation(self.bundle, x)

    def circle_value(self, loop, s=0.0):
        return holonomy_trace(self.bundle, loop, s)

    # Identity checks

    def snake_check(self, path: PathData, a: float, b: float, s: float = 0.0) -> float:
        """
        || (E (x) id)(id (x) T) - P(gamma; a, b) ||_F for a right elbow on
        [a, p] and a left elbow on [p, b], p the midpoint
        """
        p = 0.5 * (a + b)
        oriented = self.oriented
        R = right_elbow(path, a, p, oriented=oriented, reversed=oriented)
        L = left_elbow(path, p, b, oriented=oriented, reversed=oriented)
        E = self.component_value(R, s, oriented=oriented)[2]
        T = self.component_value(L, s, oriented=oriented)[2]
        identity = np.eye(self.rank)
        zigzag = np.kron(E, identity) @ np.kron(identity, T)
        return float(np.linalg.norm(zigzag - self.transport(path, a, b, s), "fro"))

    def elbow_midpoint_invariance(self, elbow: Component, m1: float, m2: float, s: float = 0.0) -> float:
        first = self.component_value(elbow, s, oriented=self.oriented, midpoint=m1)[2]
        second = self.component_value(elbow, s, oriented=self.oriented, midpoint=m2)[2]
        return float(np.linalg.norm(first - second, "fro"))

    def elbow_swap_check(self, path: PathData, a: float, b: float, s: float = 0.0) -> float:
        """Right elbow along gamma(a + b - t) against the original composed with the flip"""
        swapped = reparametrize(path, ex.subtract(ex.constant(a + b), ex.T))
        E = self.component_value(right_elbow(path, a, b), s)[2]
        E_swapped = self.component_value(right_elbow(swapped, a, b), s)[2]
        return float(np.linalg.norm(E_swapped - E @ swap_matrix(self.rank), "fro"))

    def circle_decomposition_check(self, loop: PathData, s: float = 0.0) -> float:
        """Circle value against a left elbow on [0, L/2] contracted with a right elbow on [L/2, L]"""
        half = 0.5 * loop.period
        n = self.rank
        T = self.component_value(left_elbow(loop, 0.0, half), s)[2].reshape(n, n)
        E = self.component_value(right_elbow(loop, half, loop.period), s)[2].reshape(n, n)
        return abs(float(np.trace(T @ E)) - self.circle_value(loop, s))

    def beta_tau_trace(self, x: Sequence[float]) -> float:
        """Contraction of the constant right and left elbows at x"""
        if self.oriented:
            return float(self.rank)
        return float(np.sum(self.pairing(x) * self.copairing(x)))

    def reversal_residual(self, loop: PathData, s: float = 0.0) -> float:
        return abs(self.circle_value(loop, s) - self.circle_value(reverse_loop(loop), s))

    def segal_residual(self, bordism: Bordism) -> float:
        """Level-2 bordism: value of the composite against the product of the two pieces"""
        if bordism.level != 2:
            raise InvariantViolation("segal map", f"expected a level-2 bordism, got level {bordism.level}")
        composite = self.evaluate(face_map(bordism, 1))
        first = self.evaluate(face_map(bordism, 2))
        second = self.evaluate(face_map(bordism, 0))
        return max(
            float(np.linalg.norm(c - g @ f, "fro"))
            for c, f, g in zip(composite.values, first.values, second.values)
        )

    # Families

    def evaluate_family(self, bordism: Bordism) -> Tuple[EvalResult, float]:
        """Fiberwise values and the largest second divided difference across the grid"""
        result = self.evaluate(bordism)
        return result, family_smoothness(result)

    def compare_gluing(self, first: Bordism, second: Bordism, glued: Bordism) -> GlueReport:
        """Glued family against both presentations on their own grids"""
        glued_values = self.evaluate(glued)
        by_fiber = dict(zip(glued_values.fibers, glued_values.values))
        deviation = 0.0
        for presentation in (first, second):
            result = self.evaluate(presentation)
            for s, value in zip(result.fibers, result.values):
                deviation = max(deviation, float(np.linalg.norm(by_fiber[s] - value, "fro")))

        partition = glued.components[0].cuts.cuts[0].partition
        partition_error = max(abs(sum(partition.weights(s)) - 1.0) for s in glued_values.fibers)
        overlap = sorted(set(first.fibers()) & set(second.fibers()))
        logger.info(f"gluing deviation {deviation:.3e} over {len(glued_values.fibers)} fibers")
        return GlueReport(
            grid=list(glued_values.fibers),
            overlap=overlap,
            partition_error=partition_error,
            max_deviation=deviation,
            tolerance=self.GLUE_TOL,
            passed=deviation <= self.GLUE_TOL and partition_error <= 1e-12,
        )


def family_smoothness(result: EvalResult) -> float:
    fibers, values = result.fibers, result.values
    worst = 0.0
    for k in range(1, len(fibers) - 1):
        h1, h2 = fibers[k] - fibers[k - 1], fibers[k + 1] - fibers[k]
        second = 2.0 * ((values[k + 1] - values[k]) / h2 - (values[k] - values[k - 1]) / h1) / (h1 + h2)
        worst = max(worst, float(np.linalg.norm(second, "fro")))
    return worst


def evaluate(tft: TFTData, bordism: Bordism) -> EvalResult:
    return FieldTheoryEvaluator(tft).evaluate(bordism)


def evaluate_oriented(tft: TFTData, bordism: Bordism) -> EvalResult:
    return FieldTheoryEvaluator(tft).evaluate_oriented(bordism)


def gauge_action(result: EvalResult, alpha: np.ndarray) -> List[np.ndarray]:
    """
    Values transported along a constant gauge alpha: alpha on outgoing V
    factors, alpha^-T on outgoing V* factors, inverses on incoming ones
    """
    inverse = checked_inverse(alpha, what="gauge transformation")
    on_out = {PRIMAL: alpha, DUAL: inverse.T}
    on_in = {PRIMAL: inverse, DUAL: alpha.T}
    left = kron_all([on_out[label] for label in result.codomain])
    right = kron_all([on_in[label] for label in result.domain])
    return [left @ value @ right for value in result.values]
