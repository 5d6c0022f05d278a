"""
Trivialized vector bundles with connection and bilinear form
Parallel transport, holonomy, coevaluation and compatibility checks

Sign convention: the covariant derivative is (nabla_v u)^i = d_v u^i + omega^i_j(v) u^j,
so a parallel section along gamma solves u' = -omega(gamma') u.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from geometry import expressions as ex
from geometry import settings
from geometry.errors import DomainExitError, InvariantViolation
from geometry.expressions import SmoothExpr
from geometry.linalg import check_symmetric, checked_inverse, indefinite_orthonormalize
from geometry.ode import OdeProblem, fundamental_solution
from geometry.schemas import CompatibilityReport

logger = logging.getLogger(__name__)

PATH_VARIABLES = ("t", "s")
DOMAIN_SLACK = 1e-9
PERIODICITY_TOL = 1e-10
COMPATIBILITY_TOL = 1e-9


@dataclass(frozen=True)
class BundleData:
    """
    Rank-n bundle over a box M in R^m with a single global chart

    omega[mu][i][j] is the coefficient omega^i_{j,mu} over (x1..xm),
    beta[i][j] the bilinear form. Indices are 0-based here, 1-based in files.
    """
    rank: int
    dim: int
    omega: Tuple[Tuple[Tuple[SmoothExpr, ...], ...], ...]
    beta: Tuple[Tuple[SmoothExpr, ...], ...]
    domain: Tuple[Tuple[float, float], ...]
    compatible: bool = False
    _compiled: dict = field(default=None, init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.rank < 1 or self.dim < 1:
            raise InvariantViolation("bundle shape", f"rank {self.rank} and dimension {self.dim} must be positive")
        if len(self.omega) != self.dim or any(len(w) != self.rank for w in self.omega) \
                or any(len(r) != self.rank for w in self.omega for r in w):
            raise InvariantViolation("bundle shape", "omega must have shape (dim, rank, rank)")
        if len(self.beta) != self.rank or any(len(r) != self.rank for r in self.beta):
            raise InvariantViolation("bundle shape", "beta must have shape (rank, rank)")
        if len(self.domain) != self.dim or any(lo >= hi for lo, hi in self.domain):
            raise InvariantViolation("bundle shape", "domain must be a nonempty box with one interval per coordinate")

        names = self.coordinates
        allowed = set(names)
        for e in itertools.chain(self._omega_entries(), self._beta_entries()):
            stray = e.variables - allowed
            if stray:
                raise InvariantViolation("bundle variables", f"unexpected variable(s) {sorted(stray)} in `{e}`")

        compiled = {
            "omega": [ex.compile_expr(e, names) for e in self._omega_entries()],
            "beta": [ex.compile_expr(e, names) for e in self._beta_entries()],
            "dbeta": [
                ex.compile_expr(ex.differentiate(e, name), names)
                for name in names for e in self._beta_entries()
            ],
        }
        object.__setattr__(self, "_compiled", compiled)

    @property
    def coordinates(self) -> Tuple[str, ...]:
        return tuple(f"x{mu + 1}" for mu in range(self.dim))

    def _omega_entries(self):
        return [e for w in self.omega for row in w for e in row]

    def _beta_entries(self):
        return [e for row in self.beta for e in row]

    def connection_at(self, x: Sequence[float]) -> np.ndarray:
        """omega at x as an array of shape (dim, rank, rank)"""
        values = [f(*x) for f in self._compiled["omega"]]
        return np.array(values).reshape(self.dim, self.rank, self.rank)

    def form_at(self, x: Sequence[float]) -> np.ndarray:
        values = [f(*x) for f in self._compiled["beta"]]
        return np.array(values).reshape(self.rank, self.rank)

    def form_derivative_at(self, x: Sequence[float]) -> np.ndarray:
        """d_mu beta at x, shape (dim, rank, rank), from symbolic derivatives"""
        values = [f(*x) for f in self._compiled["dbeta"]]
        return np.array(values).reshape(self.dim, self.rank, self.rank)

    def contains(self, x: Sequence[float], slack: float = DOMAIN_SLACK) -> bool:
        return all(lo - slack <= xi <= hi + slack for xi, (lo, hi) in zip(x, self.domain))

    def sample_grid(self, per_axis: int = 5, margin: float = 0.0) -> np.ndarray:
        """Tensor grid of points inside the domain box, `margin` away from its faces"""
        axes = [np.linspace(lo + margin, hi - margin, per_axis) for lo, hi in self.domain]
        return np.array(list(itertools.product(*axes)))

    @classmethod
    def from_matrices(cls, omega, beta, domain, compatible: bool = False) -> "BundleData":
        """Build from nested lists of expressions or numbers"""
        omega_t = tuple(tuple(tuple(ex.as_expr(e) for e in row) for row in w) for w in omega)
        beta_t = tuple(tuple(ex.as_expr(e) for e in row) for row in beta)
        domain_t = tuple((float(lo), float(hi)) for lo, hi in domain)
        return cls(len(beta_t), len(omega_t), omega_t, beta_t, domain_t, compatible)


def flat_bundle(rank: int, dim: int, domain=None, beta: Optional[np.ndarray] = None) -> BundleData:
    """omega = 0 with a constant form (identity by default)"""
    domain = domain or [(-2.0, 2.0)] * dim
    beta = np.eye(rank) if beta is None else np.asarray(beta, dtype=float)
    omega = [[[0.0] * rank for _ in range(rank)] for _ in range(dim)]
    return BundleData.from_matrices(omega, beta.tolist(), domain, compatible=True)


def validate_bundle(bundle: BundleData, grid: Optional[np.ndarray] = None) -> BundleData:
    """
    Check the sampled invariants: beta symmetric and invertible everywhere,
    and compatibility when the bundle is flagged compatible
    """
    grid = bundle.sample_grid() if grid is None else grid
    for x in grid:
        B = bundle.form_at(x)
        check_symmetric(B, what=f"beta at {tuple(np.round(x, 6))}")
        checked_inverse(B, what=f"beta at {tuple(np.round(x, 6))}")
    if bundle.compatible:
        report = check_compatibility(bundle, grid, COMPATIBILITY_TOL)
        if not report.passed:
            raise InvariantViolation(
                "connection compatibility",
                f"residual {report.max_residual:.3e} at {report.worst_point} exceeds {COMPATIBILITY_TOL:.0e}",
            )
    return bundle


def gauge_transform(bundle: BundleData, alpha: np.ndarray) -> BundleData:
    """
    Pushforward along the constant bundle automorphism alpha:
    omega'_mu = alpha omega_mu alpha^-1, beta' = alpha^-T beta alpha^-1
    """
    alpha = np.asarray(alpha, dtype=float)
    inverse = checked_inverse(alpha, what="gauge transformation")
    n = bundle.rank

    def conjugate(left: np.ndarray, entries, right: np.ndarray):
        return [[
            ex.linear_combination(
                [left[i, k] * right[l, j] for k in range(n) for l in range(n)],
                [entries[k][l] for k in range(n) for l in range(n)],
            ) for j in range(n)] for i in range(n)]

    omega = [conjugate(alpha, w, inverse) for w in bundle.omega]
    beta = conjugate(inverse.T, bundle.beta, inverse)
    return BundleData.from_matrices(omega, beta, bundle.domain, bundle.compatible)


# Paths

@dataclass(frozen=True)
class ExpressionReparametrization:
    """t -> F(t, s) given by an expression"""
    expr: SmoothExpr

    def value(self, t: float, s: float = 0.0) -> float:
        return ex.compile_expr(self.expr, PATH_VARIABLES)(t, s)

    def derivative(self, t: float, s: float = 0.0) -> float:
        return ex.compile_expr(ex.differentiate(self.expr, "t"), PATH_VARIABLES)(t, s)


@dataclass(frozen=True)
class ComposedReparametrization:
    """outer after inner"""
    outer: object
    inner: object

    def value(self, t: float, s: float = 0.0) -> float:
        return self.outer.value(self.inner.value(t, s), s)

    def derivative(self, t: float, s: float = 0.0) -> float:
        return self.outer.derivative(self.inner.value(t, s), s) * self.inner.derivative(t, s)


@dataclass(frozen=True)
class PathData:
    """
    Path (or S-family of paths) gamma(t[, s]) in the target box

    An optional reparametrization chi (anything with value/derivative in
    (t, s)) is applied first: the path is then t -> gamma(chi(t)).
    """
    components: Tuple[SmoothExpr, ...]
    period: Optional[float] = None
    grid: Optional[Tuple[float, ...]] = None
    reparametrization: Optional[object] = None

    def __post_init__(self):
        for e in self.components:
            stray = e.variables - set(PATH_VARIABLES)
            if stray:
                raise InvariantViolation("path variables", f"unexpected variable(s) {sorted(stray)} in `{e}`")
        if self.period is not None and not self.period > 0:
            raise InvariantViolation("loop periodicity", f"period must be positive, got {self.period}")

    @property
    def dim(self) -> int:
        return len(self.components)

    @classmethod
    def from_exprs(cls, components, period=None, grid=None) -> "PathData":
        return cls(tuple(ex.as_expr(c) for c in components), period, None if grid is None else tuple(grid))

    def _raw_position(self, u: float, s: float) -> np.ndarray:
        return np.array([ex.compile_expr(c, PATH_VARIABLES)(u, s) for c in self.components])

    def _raw_velocity(self, u: float, s: float) -> np.ndarray:
        return np.array([
            ex.compile_expr(ex.differentiate(c, "t"), PATH_VARIABLES)(u, s) for c in self.components
        ])

    def position(self, t: float, s: float = 0.0) -> np.ndarray:
        u = t if self.reparametrization is None else self.reparametrization.value(t, s)
        return self._raw_position(u, s)

    def velocity(self, t: float, s: float = 0.0) -> np.ndarray:
        if self.reparametrization is None:
            return self._raw_velocity(t, s)
        chi = self.reparametrization
        rate = chi.derivative(t, s)
        if rate == 0.0:
            return np.zeros(self.dim)
        return self._raw_velocity(chi.value(t, s), s) * rate

    def substituted(self, replacement: SmoothExpr) -> "PathData":
        """
        Path t -> gamma(F(t)). Exact expression substitution when no
        reparametrization is attached; otherwise F is composed inside it.
        """
        replacement = ex.as_expr(replacement)
        if self.reparametrization is None:
            components = tuple(ex.substitute(c, {"t": replacement}) for c in self.components)
            return PathData(components, self.period, self.grid)
        composed = ComposedReparametrization(self.reparametrization, ExpressionReparametrization(replacement))
        return PathData(self.components, self.period, self.grid, composed)

    def with_reparametrization(self, chi) -> "PathData":
        inner = chi if self.reparametrization is None else ComposedReparametrization(self.reparametrization, chi)
        return PathData(self.components, self.period, self.grid, inner)

    def fibers(self) -> Tuple[float, ...]:
        return self.grid if self.grid else (0.0,)


def constant_path(x: Sequence[float]) -> PathData:
    return PathData.from_exprs([float(v) for v in x])


def straight_path(x: Sequence[float], v: Sequence[float]) -> PathData:
    """t -> x + t v"""
    return PathData.from_exprs([ex.add(ex.constant(xi), ex.multiply(ex.constant(vi), ex.T)) for xi, vi in zip(x, v)])


def reparametrize(path: PathData, F: SmoothExpr) -> PathData:
    """gamma o F"""
    return path.substituted(F)


def reverse_loop(loop: PathData) -> PathData:
    """t -> gamma(-t), same period"""
    return loop.substituted(ex.negate(ex.T))


def validate_path(path: PathData, bundle: Optional[BundleData] = None,
                  span: Tuple[float, float] = (0.0, 1.0), samples: int = 20) -> PathData:
    """
    Periodicity at `samples` points and, given a bundle, that the sampled
    image stays in its domain box
    """
    for s in path.fibers():
        if path.period is not None:
            for t in np.linspace(0.0, path.period, samples, endpoint=False):
                gap = np.max(np.abs(path.position(t + path.period, s) - path.position(t, s)))
                if gap > PERIODICITY_TOL:
                    raise InvariantViolation("loop periodicity", f"gamma(t + period) differs from gamma(t) by {gap:.3e} at t = {t:.6g}")
        if bundle is not None:
            if path.dim != bundle.dim:
                raise InvariantViolation("path dimension", f"path has {path.dim} components, bundle base has dimension {bundle.dim}")
            lo, hi = (0.0, path.period) if path.period is not None else span
            for t in np.linspace(lo, hi, 10 * samples + 1):
                x = path.position(t, s)
                if not bundle.contains(x):
                    raise DomainExitError(float(t), x)
    return path


# Transport

def pullback_coefficient(bundle, path: PathData, s: float = 0.0) -> Callable[[float], np.ndarray]:
    """
    A(t) = sum_mu omega_mu(gamma(t)) gamma'^mu(t), the coefficient of the
    transport equation u' = -A(t) u

    `bundle` is anything exposing connection_at/contains/dim.
    """
    if path.dim != bundle.dim:
        raise InvariantViolation("path dimension", f"path has {path.dim} components, bundle base has dimension {bundle.dim}")

    def coefficient(t: float) -> np.ndarray:
        x = path.position(t, s)
        if not bundle.contains(x):
            raise DomainExitError(float(t), x)
        velocity = path.velocity(t, s)
        if not np.any(velocity):
            return np.zeros((bundle.rank, bundle.rank))
        return np.tensordot(velocity, bundle.connection_at(x), axes=1)

    return coefficient


def parallel_transport(bundle, path: PathData, a: float, b: float, s: float = 0.0,
                       rtol: Optional[float] = None) -> np.ndarray:
    """
    Transport P(gamma; a, b): V_gamma(a) -> V_gamma(b)

    P = I for a = b; for a > b the result is the inverse of the transport
    from b to a (backward integration).
    """
    coefficient = pullback_coefficient(bundle, path, s)
    problem = OdeProblem(lambda t: -coefficient(t), a, b, settings.RTOL if rtol is None else rtol)
    return fundamental_solution(problem)


def holonomy(bundle, loop: PathData, s: float = 0.0, rtol: Optional[float] = None) -> np.ndarray:
    if loop.period is None:
        raise InvariantViolation("loop periodicity", "holonomy needs a periodic loop")
    return parallel_transport(bundle, loop, 0.0, loop.period, s, rtol)


def holonomy_trace(bundle, loop: PathData, s: float = 0.0, rtol: Optional[float] = None) -> float:
    """tr P(loop) over one period"""
    return float(np.trace(holonomy(bundle, loop, s, rtol)))


def coevaluation(bundle, x: Sequence[float]) -> np.ndarray:
    """
    tau = sum_i eps_i b_i b_i^T for a generalized orthonormal basis of beta(x);
    equals beta(x)^-1 as a matrix
    """
    basis, signs = indefinite_orthonormalize(bundle.form_at(x))
    return (basis * signs) @ basis.T


def compatibility_residual(bundle, x: Sequence[float]) -> np.ndarray:
    """Frobenius norms of d_mu beta - omega_mu^T beta - beta omega_mu, one per direction"""
    B = bundle.form_at(x)
    dB = bundle.form_derivative_at(x)
    omega = bundle.connection_at(x)
    return np.array([
        np.linalg.norm(dB[mu] - omega[mu].T @ B - B @ omega[mu], "fro") for mu in range(bundle.dim)
    ])


def check_compatibility(bundle, grid: Optional[np.ndarray] = None, tol: float = COMPATIBILITY_TOL) -> CompatibilityReport:
    """Report-only check of the Leibniz rule for beta on a grid of sample points"""
    grid = bundle.sample_grid() if grid is None else np.asarray(grid, dtype=float)
    worst, worst_point, worst_direction = 0.0, grid[0], 0
    for x in grid:
        residuals = compatibility_residual(bundle, x)
        mu = int(np.argmax(residuals))
        if residuals[mu] > worst:
            worst, worst_point, worst_direction = float(residuals[mu]), x, mu
    return CompatibilityReport(
        max_residual=worst,
        tolerance=tol,
        passed=worst <= tol,
        worst_point=[float(v) for v in worst_point],
        worst_direction=worst_direction + 1,
        samples=len(grid),
    )


def transport_preserves_form(bundle, path: PathData, a: float, b: float, s: float = 0.0) -> float:
    """|| P^T beta(gamma(b)) P - beta(gamma(a)) ||_F"""
    P = parallel_transport(bundle, path, a, b, s)
    return float(np.linalg.norm(
        P.T @ bundle.form_at(path.position(b, s)) @ P - bundle.form_at(path.position(a, s)), "fro"
    ))
