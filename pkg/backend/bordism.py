"""
Bordism data model
Cut functions, components (standard intervals, elbows, circles), cores,
simplicial maps, modification functions, sitting instants and family gluing

A component is a curve t -> gamma(t[, s]) together with cut functions
rho_0 >= rho_1 >= ... >= rho_n whose zero sets mark the boundary points.
The core X_a^c is {rho_a >= 0 >= rho_c}; X_0^0 holds the incoming points and
X_n^n the outgoing ones.
"""

import bisect
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property, lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy import integrate, interpolate

from bundle import PATH_VARIABLES, PathData
from geometry import expressions as ex
from geometry import settings
from geometry.errors import InvariantViolation, ModificationError
from geometry.expressions import SmoothExpr

logger = logging.getLogger(__name__)

TRANSVERSALITY_TOL = 1e-8
ORDERING_TOL = 1e-12
ENDPOINT_TOL = 1e-10
PARTITION_TOL = 1e-12
# Elbow windows must stay below (sqrt(2) - 1) / 2 of the elbow length
MAX_ELBOW_WINDOW = 0.5 * (math.sqrt(2.0) - 1.0)
DEFAULT_WINDOW = 0.1
MIN_SCAN_POINTS = 40
BUMP_PANELS = 128


class ComponentKind(str, Enum):
    standard = "standard"
    right_elbow = "right_elbow"
    left_elbow = "left_elbow"
    circle = "circle"


class ModificationKind(str, Enum):
    two_sided = "two_sided"
    left = "left"
    right = "right"


# Cut functions

@dataclass(frozen=True)
class ExprCut:
    """Cut function given by an expression in (t, s)"""
    expr: SmoothExpr

    def value(self, t: float, s: float = 0.0) -> float:
        return ex.compile_expr(self.expr, PATH_VARIABLES)(t, s)

    def slope(self, t: float, s: float = 0.0) -> float:
        return ex.compile_expr(ex.differentiate(self.expr, "t"), PATH_VARIABLES)(t, s)

    def __str__(self):
        return str(self.expr)


@dataclass(frozen=True)
class BlendPartition:
    """
    Two-member smooth partition of unity on the parameter line

    The second weight rises from 0 at `lo` to 1 at `hi` with a C-infinity
    transition; the first weight is its complement.
    """
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InvariantViolation("partition of unity", f"blend interval [{self.lo}, {self.hi}] is empty")

    def weights(self, s: float) -> Tuple[float, float]:
        x = (s - self.lo) / (self.hi - self.lo)
        if x <= 0.0:
            second = 0.0
        elif x >= 1.0:
            second = 1.0
        else:
            rising, falling = math.exp(-1.0 / x), math.exp(-1.0 / (1.0 - x))
            second = rising / (rising + falling)
        return 1.0 - second, second


@dataclass(frozen=True)
class GluedCut:
    """
    chi_1(s) rho^1(t, s) + chi_2(s) rho^2(F(t, s), s), written in the first
    presentation's coordinate t
    """
    first: ExprCut
    second: ExprCut
    overlap: SmoothExpr
    partition: BlendPartition

    def value(self, t: float, s: float = 0.0) -> float:
        w1, w2 = self.partition.weights(s)
        total = 0.0
        if w1:
            total += w1 * self.first.value(t, s)
        if w2:
            total += w2 * self.second.value(self._moved(t, s), s)
        return total

    def slope(self, t: float, s: float = 0.0) -> float:
        w1, w2 = self.partition.weights(s)
        total = 0.0
        if w1:
            total += w1 * self.first.slope(t, s)
        if w2:
            rate = ex.compile_expr(ex.differentiate(self.overlap, "t"), PATH_VARIABLES)(t, s)
            total += w2 * self.second.slope(self._moved(t, s), s) * rate
        return total

    def _moved(self, t: float, s: float) -> float:
        return ex.compile_expr(self.overlap, PATH_VARIABLES)(t, s)


@dataclass(frozen=True)
class CutFamily:
    """
    Cut functions rho_0..rho_n over (t, s)

    `taus` is set when the family is in canonical form rho_a = t - tau_a(s).
    """
    cuts: tuple
    taus: Optional[Tuple[SmoothExpr, ...]] = None

    @property
    def level(self) -> int:
        return len(self.cuts) - 1

    @classmethod
    def canonical(cls, taus: Sequence) -> "CutFamily":
        taus = tuple(ex.as_expr(tau) for tau in taus)
        return cls(tuple(ExprCut(ex.subtract(ex.T, tau)) for tau in taus), taus)

    def reindexed(self, kappa: Sequence[int]) -> "CutFamily":
        taus = None if self.taus is None else tuple(self.taus[k] for k in kappa)
        return CutFamily(tuple(self.cuts[k] for k in kappa), taus)


def check_order_preserving(kappa: Sequence[int], n: int) -> Tuple[int, ...]:
    kappa = tuple(int(k) for k in kappa)
    if not kappa:
        raise InvariantViolation("simplicial map", "map from [m] must have at least one value")
    if any(k < 0 or k > n for k in kappa):
        raise InvariantViolation("simplicial map", f"values {kappa} must lie in [0, {n}]")
    if any(k2 < k1 for k1, k2 in zip(kappa, kappa[1:])):
        raise InvariantViolation("simplicial map", f"{kappa} is not order-preserving")
    return kappa


# Components

@dataclass(frozen=True)
class Component:
    """
    One connected component of a bordism

    For elbows, [a, b] are the elbow endpoints; for general (glued) standard
    components they are the span used to place the window. `window` is the
    half-width epsilon of the parameter neighbourhood around the core.
    """
    kind: ComponentKind
    path: PathData
    cuts: CutFamily
    a: float = 0.0
    b: float = 0.0
    oriented: bool = False
    reversed: bool = False
    window: Optional[float] = None

    @property
    def level(self) -> int:
        return self.cuts.level

    def span(self, s: float = 0.0) -> Tuple[float, float]:
        if self.kind == ComponentKind.circle:
            return 0.0, self.path.period
        if self.kind == ComponentKind.standard and self.cuts.taus is not None:
            values = [ex.compile_expr(tau, PATH_VARIABLES)(0.0, s) for tau in self.cuts.taus]
            return min(values), max(values)
        return self.a, self.b

    def window_at(self, s: float = 0.0) -> Tuple[float, float]:
        lo, hi = self.span(s)
        if self.kind == ComponentKind.circle:
            return lo, hi
        eps = self.window
        if eps is None:
            eps = DEFAULT_WINDOW * (hi - lo) if hi > lo else DEFAULT_WINDOW
        return lo - eps, hi + eps

    def fibers(self) -> Tuple[float, ...]:
        return self.path.fibers()


def standard(path: PathData, taus: Sequence, oriented: bool = False, reversed: bool = False,
             window: Optional[float] = None) -> Component:
    """Standard component (gamma; tau_0..tau_n) with rho_a = t - tau_a(s)"""
    component = Component(ComponentKind.standard, path, CutFamily.canonical(taus),
                          oriented=oriented, reversed=reversed, window=window)
    for s in path.fibers():
        values = standard_cuts(component, s)
        for k, (lo, hi) in enumerate(zip(values, values[1:])):
            if hi < lo:
                raise InvariantViolation(
                    "cut ordering (O3)(a)",
                    f"tau_{k + 1} = {hi:.6g} < tau_{k} = {lo:.6g} at s = {s:.6g}, so rho_{k} >= rho_{k + 1} fails",
                )
    return component


def _check_elbow(a: float, b: float, window: Optional[float]) -> float:
    if not a < b:
        raise InvariantViolation("elbow endpoints", f"a < b required, got a = {a}, b = {b}")
    eps = DEFAULT_WINDOW * (b - a) if window is None else float(window)
    if not 0.0 < eps < MAX_ELBOW_WINDOW * (b - a):
        raise InvariantViolation("elbow window", f"window {eps:.6g} must lie in (0, {MAX_ELBOW_WINDOW * (b - a):.6g})")
    return eps


def right_elbow(path: PathData, a: float, b: float, oriented: bool = False, reversed: bool = False,
                window: Optional[float] = None) -> Component:
    """rho_0 = (t - a)(t - b), rho_1 = -(b - a)^2 / 4: two incoming points, none outgoing"""
    a, b = float(a), float(b)
    eps = _check_elbow(a, b, window)
    quadratic = ex.multiply(ex.subtract(ex.T, ex.constant(a)), ex.subtract(ex.T, ex.constant(b)))
    cuts = CutFamily((ExprCut(quadratic), ExprCut(ex.constant(-0.25 * (b - a) ** 2))))
    return Component(ComponentKind.right_elbow, path, cuts, a, b, oriented, reversed, eps)


def left_elbow(path: PathData, a: float, b: float, oriented: bool = False, reversed: bool = False,
               window: Optional[float] = None) -> Component:
    """rho_0 = (b - a)^2 / 4, rho_1 = -(t - a)(t - b): no incoming points, two outgoing"""
    a, b = float(a), float(b)
    eps = _check_elbow(a, b, window)
    quadratic = ex.multiply(ex.subtract(ex.T, ex.constant(a)), ex.subtract(ex.T, ex.constant(b)))
    cuts = CutFamily((ExprCut(ex.constant(0.25 * (b - a) ** 2)), ExprCut(ex.negate(quadratic))))
    return Component(ComponentKind.left_elbow, path, cuts, a, b, oriented, reversed, eps)


def circle(loop: PathData, oriented: bool = False, reversed: bool = False) -> Component:
    """Closed component; rho_0 = 1 and rho_1 = -1 have no zeros"""
    if loop.period is None:
        raise InvariantViolation("loop periodicity", "circle components need a periodic path")
    cuts = CutFamily((ExprCut(ex.ONE), ExprCut(ex.constant(-1.0))))
    return Component(ComponentKind.circle, loop, cuts, 0.0, loop.period, oriented, reversed)


@dataclass(frozen=True)
class Bordism:
    """Disjoint union of components over a common parameter grid"""
    components: Tuple[Component, ...]
    grid: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if not self.components:
            raise InvariantViolation("bordism", "at least one component is required")
        levels = {c.level for c in self.components}
        if len(levels) != 1:
            raise InvariantViolation("bordism", f"components have different numbers of cuts: {sorted(levels)}")

    @property
    def level(self) -> int:
        return self.components[0].level

    def fibers(self) -> Tuple[float, ...]:
        if self.grid:
            return self.grid
        return self.components[0].fibers()

    @classmethod
    def of(cls, *components: Component, grid=None) -> "Bordism":
        return cls(tuple(components), None if grid is None else tuple(grid))


def disjoint_union(*bordisms: Bordism) -> Bordism:
    components = tuple(c for b in bordisms for c in b.components)
    grids = {b.grid for b in bordisms if b.grid}
    if len(grids) > 1:
        raise InvariantViolation("bordism", "disjoint union needs a common parameter grid")
    return Bordism(components, grids.pop() if grids else None)


# Roots and cores

def _scan_grid(lo: float, hi: float) -> np.ndarray:
    count = max(int(math.ceil(settings.GRID_DENSITY * (hi - lo))), MIN_SCAN_POINTS) + 1
    return np.linspace(lo, hi, count)


def _bisect(cut, s: float, lo: float, hi: float, f_lo: float) -> float:
    while hi - lo > settings.ROOT_TOL:
        mid = 0.5 * (lo + hi)
        f_mid = cut.value(mid, s)
        if f_mid == 0.0:
            return mid
        if (f_mid > 0.0) == (f_lo > 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@lru_cache(maxsize=4096)
def cut_roots(cut, s: float, lo: float, hi: float) -> Tuple[float, ...]:
    """
    Zeros of a cut function on [lo, hi]: sign scan at the configured grid
    density, then bisection to ROOT_TOL. Every zero must be transverse.
    """
    grid = _scan_grid(lo, hi)
    values = [cut.value(t, s) for t in grid]
    roots: List[float] = []
    for k, (t, v) in enumerate(zip(grid, values)):
        if v == 0.0:
            roots.append(float(t))
        elif k + 1 < len(grid) and values[k + 1] != 0.0 and (v > 0.0) != (values[k + 1] > 0.0):
            roots.append(_bisect(cut, s, float(t), float(grid[k + 1]), v))
    for r in roots:
        slope = cut.slope(r, s)
        if abs(slope) <= TRANSVERSALITY_TOL:
            raise InvariantViolation(
                "cut transversality (O3)(b)", f"d rho vanishes at its zero t = {r:.12g} (s = {s:.6g}, |d rho| = {abs(slope):.3e})"
            )
    logger.debug(f"cut `{cut}` has {len(roots)} zero(s) on [{lo:.6g}, {hi:.6g}] at s = {s:.6g}")
    return tuple(roots)


def _merge(intervals: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
    merged: List[Tuple[float, float]] = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1][1] + settings.ROOT_TOL:
            merged[-1] = (merged[-1][0], max(hi, merged[-1][1]))
        else:
            merged.append((lo, hi))
    return merged


def component_core(component: Component, a: int, c: int, s: float = 0.0) -> List[Tuple[float, float]]:
    """{t in window : rho_a(t, s) >= 0 >= rho_c(t, s)} as a sorted list of closed intervals"""
    n = component.level
    if not 0 <= a <= c <= n:
        raise InvariantViolation("core indices", f"0 <= a <= c <= {n} required, got a = {a}, c = {c}")
    if component.cuts.taus is not None:
        taus = standard_cuts(component, s)
        return [(taus[a], taus[c])]

    lo, hi = component.window_at(s)
    rho_a, rho_c = component.cuts.cuts[a], component.cuts.cuts[c]
    roots_a = cut_roots(rho_a, s, lo, hi)
    roots_c = roots_a if c == a else cut_roots(rho_c, s, lo, hi)
    breaks = sorted(set([lo, hi] + list(roots_a) + list(roots_c)))

    def inside(t: float) -> bool:
        return rho_a.value(t, s) >= 0.0 >= rho_c.value(t, s)

    intervals = [(p, q) for p, q in zip(breaks, breaks[1:]) if inside(0.5 * (p + q))]
    covered = _merge(intervals)
    for r in roots_a:
        if any(p - settings.ROOT_TOL <= r <= q + settings.ROOT_TOL for p, q in covered):
            continue
        if a == c or rho_c.value(r, s) <= ORDERING_TOL:
            intervals.append((r, r))
    for r in roots_c:
        if c != a and not any(p - settings.ROOT_TOL <= r <= q + settings.ROOT_TOL for p, q in covered) \
                and rho_a.value(r, s) >= -ORDERING_TOL:
            intervals.append((r, r))
    return _merge(intervals)


def core_intervals(bordism, a: int, c: int, s: float = 0.0) -> List[Tuple[float, float]]:
    """Core X_a^c on fiber s, component by component"""
    components = bordism.components if isinstance(bordism, Bordism) else (bordism,)
    return [interval for component in components for interval in component_core(component, a, c, s)]


def core_points(component: Component, a: int, s: float = 0.0) -> List[float]:
    """Points of X_a^a (the zeros of rho_a), increasing"""
    return [lo for lo, _ in component_core(component, a, a, s)]


def standard_cuts(component: Component, s: float = 0.0) -> List[float]:
    """
    tau_0(s)..tau_n(s): exact for canonical families, otherwise the unique
    zero of each rho_a inside the window
    """
    if component.cuts.taus is not None:
        return [float(ex.compile_expr(tau, PATH_VARIABLES)(0.0, s)) for tau in component.cuts.taus]
    if component.kind != ComponentKind.standard:
        raise InvariantViolation("standard form", f"{component.kind.value} components have no standard cuts")
    lo, hi = component.window_at(s)
    taus = []
    for k, cut in enumerate(component.cuts.cuts):
        roots = cut_roots(cut, s, lo, hi)
        if len(roots) != 1:
            raise InvariantViolation(
                "standard form", f"rho_{k} has {len(roots)} zeros in [{lo:.6g}, {hi:.6g}] at s = {s:.6g}, expected 1"
            )
        taus.append(roots[0])
    return taus


def check_cut_family(component: Component, samples_per_unit: Optional[int] = None) -> Component:
    """
    Ordering rho_0 >= ... >= rho_n on the window grid, transverse zeros and
    bounded cores, on every fiber
    """
    density = samples_per_unit or settings.GRID_DENSITY
    n = component.level
    for s in component.fibers():
        lo, hi = component.window_at(s)
        grid = np.linspace(lo, hi, max(int(math.ceil(density * (hi - lo))), MIN_SCAN_POINTS) + 1)
        for t in grid:
            values = [cut.value(t, s) for cut in component.cuts.cuts]
            for k in range(n):
                if values[k] < values[k + 1] - ORDERING_TOL * max(1.0, abs(values[k])):
                    raise InvariantViolation(
                        "cut ordering (O3)(a)", f"rho_{k} >= rho_{k + 1} fails at t = {t:.6g} (s = {s:.6g})"
                    )
        for k, cut in enumerate(component.cuts.cuts):
            cut_roots(cut, s, lo, hi)
        if component.kind == ComponentKind.standard:
            for p, q in component_core(component, 0, n, s):
                if p <= lo or q >= hi:
                    raise InvariantViolation(
                        "core properness (O3)(c)", f"core [{p:.6g}, {q:.6g}] reaches the window edge at s = {s:.6g}"
                    )
    return component


def covering_degree(bordism, a: int) -> int:
    """Number of points of X_a^a, required to be the same on every fiber"""
    components = bordism.components if isinstance(bordism, Bordism) else (bordism,)
    fibers = bordism.fibers()
    counts = {s: sum(len(core_points(c, a, s)) for c in components) for s in fibers}
    if len(set(counts.values())) != 1:
        raise InvariantViolation("finite covering", f"X_{a}^{a} has point counts {counts} across the grid")
    return next(iter(counts.values()))


def point_signs(bordism, a: int, s: float = 0.0) -> List[int]:
    """
    +1 / -1 for each point of X_a^a: sign of d rho_a at the zero, flipped
    for reversed components
    """
    components = bordism.components if isinstance(bordism, Bordism) else (bordism,)
    signs: List[int] = []
    for component in components:
        if not component.oriented:
            raise InvariantViolation("orientation", f"{component.kind.value} component is not oriented")
        cut = component.cuts.cuts[a]
        flip = -1 if component.reversed else 1
        for t in core_points(component, a, s):
            slope = cut.slope(t, s)
            if abs(slope) <= TRANSVERSALITY_TOL:
                raise InvariantViolation("cut transversality (O3)(b)", f"d rho_{a} vanishes at t = {t:.12g}")
            signs.append(flip * (1 if slope > 0 else -1))
    return signs


def tensor_order(bordism: Bordism, s: float = 0.0) -> List[int]:
    """Component indices sorted by (leftmost core point, index)"""
    n = bordism.level
    keys = []
    for k, component in enumerate(bordism.components):
        core = component_core(component, 0, n, s)
        keys.append((core[0][0] if core else component.window_at(s)[0], k))
    return [k for _, k in sorted(keys)]


# Simplicial structure and reparametrization

def simplicial_map(bordism: Bordism, kappa: Sequence[int]) -> Bordism:
    """Re-index every component's cuts by the order-preserving map kappa: [m] -> [n]"""
    kappa = check_order_preserving(kappa, bordism.level)
    components = tuple(replace(c, cuts=c.cuts.reindexed(kappa)) for c in bordism.components)
    return Bordism(components, bordism.grid)


def face_map(bordism: Bordism, j: int) -> Bordism:
    """Forget rho_j"""
    return simplicial_map(bordism, [k for k in range(bordism.level + 1) if k != j])


def degeneracy_map(bordism: Bordism, j: int) -> Bordism:
    """Duplicate rho_j"""
    return simplicial_map(bordism, [k for k in range(bordism.level + 1) for _ in range(2 if k == j else 1)])


def cut_rescale(path: PathData, a: float, b: float) -> PathData:
    """t -> gamma(a + (b - a) t)"""
    if b < a:
        raise InvariantViolation("rescale interval", f"a <= b required, got a = {a}, b = {b}")
    return path.substituted(ex.add(ex.constant(a), ex.multiply(ex.constant(b - a), ex.T)))


# Modification functions

def default_bump(c: float, d: float) -> SmoothExpr:
    """exp(-L^2 / ((t - c)(d - t))) with L = d - c, used on its support (c, d)"""
    width = ex.multiply(ex.subtract(ex.T, ex.constant(c)), ex.subtract(ex.constant(d), ex.T))
    return ex.exp(ex.negate(ex.divide(ex.constant((d - c) ** 2), width)))


@dataclass(frozen=True)
class BumpField:
    """
    Nonnegative bump f(t) on the open support (c, d); zero elsewhere

    int f and int t f are integrated once by adaptive quadrature over
    BUMP_PANELS panels of the support and read in between through quintic
    Hermite interpolation, with f and f' as the derivative data.
    """
    expr: SmoothExpr
    c: float
    d: float

    def __call__(self, t: float) -> float:
        if t <= self.c or t >= self.d:
            return 0.0
        return ex.compile_expr(self.expr, ("t",))(t)

    def mirrored(self, a: float, b: float) -> "BumpField":
        """u -> f(a + b - u)"""
        flipped = ex.substitute(self.expr, {"t": ex.subtract(ex.constant(a + b), ex.T)})
        return BumpField(flipped, a + b - self.d, a + b - self.c)

    def _quad(self, f, lo: float, hi: float, weight_t: bool = False) -> float:
        integrand = (lambda u: u * f(u)) if weight_t else f
        value, _ = integrate.quad(integrand, lo, hi, epsabs=1e-14, epsrel=1e-12, limit=200)
        return value

    @cached_property
    def _antiderivatives(self) -> Tuple[interpolate.BPoly, interpolate.BPoly]:
        ts = np.linspace(self.c, self.d, BUMP_PANELS + 1)
        slope = ex.compile_expr(ex.differentiate(self.expr, "t"), ("t",))
        bump = ex.compile_expr(self.expr, ("t",))
        f = np.array([self(t) for t in ts])
        df = np.array([slope(t) if self.c < t < self.d else 0.0 for t in ts])
        F = np.concatenate([[0.0], np.cumsum([self._quad(bump, p, q) for p, q in zip(ts, ts[1:])])])
        M = np.concatenate([[0.0], np.cumsum([self._quad(bump, p, q, weight_t=True) for p, q in zip(ts, ts[1:])])])
        return (
            interpolate.BPoly.from_derivatives(ts, np.column_stack([F, f, df])),
            interpolate.BPoly.from_derivatives(ts, np.column_stack([M, ts * f, f + ts * df])),
        )

    def integral(self, upper: float, weight_t: bool = False) -> float:
        """int_c^upper f (or t f); the argument is clipped to the support"""
        upper = min(max(upper, self.c), self.d)
        if upper <= self.c:
            return 0.0
        return float(self._antiderivatives[1 if weight_t else 0](upper))


@dataclass(frozen=True)
class ModificationFn:
    """
    Nondecreasing reparametrization chi of [a, b]

    two_sided: chi = a + (b - a) F / F_tot, constant near both ends.
    left: h = a + kappa F + G with G(t) = (t F(t) - M(t)) / F_tot; constant
    near a and the identity near b. right: the reflection of a left one.
    Here F(t) = int_c^t f and M(t) = int_c^t u f(u) du.
    """
    kind: ModificationKind
    a: float
    b: float
    bump: BumpField
    total: float = field(default=0.0, compare=False)
    kappa: float = field(default=0.0, compare=False)

    def value(self, t: float, s: float = 0.0) -> float:
        if self.kind == ModificationKind.right:
            return self.a + self.b - self._left_value(self.a + self.b - t)
        if self.kind == ModificationKind.left:
            return self._left_value(t)
        return self.a + (self.b - self.a) * self.bump.integral(t) / self.total

    def derivative(self, t: float, s: float = 0.0) -> float:
        if self.kind == ModificationKind.right:
            return self._left_derivative(self.a + self.b - t)
        if self.kind == ModificationKind.left:
            return self._left_derivative(t)
        return (self.b - self.a) * self.bump(t) / self.total

    def _left_value(self, t: float) -> float:
        F = self.bump.integral(t)
        M = self.bump.integral(t, weight_t=True)
        return self.a + self.kappa * F + (t * F - M) / self.total

    def _left_derivative(self, t: float) -> float:
        return self.kappa * self.bump(t) + self.bump.integral(t) / self.total

    @property
    def flat_margin(self) -> Tuple[float, float]:
        """Lengths of the end pieces where the function is constant or the identity"""
        if self.kind == ModificationKind.right:
            return self.b - self.bump.d, self.bump.c - self.a
        return self.bump.c - self.a, self.b - self.bump.d


@dataclass(frozen=True)
class ComposedModification:
    """outer o inner on the same interval"""
    outer: object
    inner: object

    @property
    def kind(self) -> ModificationKind:
        return self.outer.kind

    @property
    def a(self) -> float:
        return self.outer.a

    @property
    def b(self) -> float:
        return self.outer.b

    def value(self, t: float, s: float = 0.0) -> float:
        return self.outer.value(self.inner.value(t, s), s)

    def derivative(self, t: float, s: float = 0.0) -> float:
        return self.outer.derivative(self.inner.value(t, s), s) * self.inner.derivative(t, s)

    @property
    def flat_margin(self) -> Tuple[float, float]:
        return tuple(min(x, y) for x, y in zip(self.outer.flat_margin, self.inner.flat_margin))


def build_modification(kind, a: float, b: float, f: Optional[SmoothExpr] = None,
                       support: Optional[Tuple[float, float]] = None) -> ModificationFn:
    """
    Left, right or two-sided modification function on [a, b] from a bump f >= 0

    The default bump is exp(-L^2/((t-c)(d-t))), L = d - c, on (c, d) = (a + 0.1 L, b - 0.1 L).
    """
    kind = ModificationKind(kind)
    a, b = float(a), float(b)
    if not a < b:
        raise ModificationError(f"modification interval needs a < b, got [{a}, {b}]")
    c, d = support if support is not None else (a + 0.1 * (b - a), b - 0.1 * (b - a))
    if not a < c < d < b:
        raise ModificationError(f"bump support ({c}, {d}) must lie strictly inside ({a}, {b})")
    bump = BumpField(default_bump(c, d) if f is None else ex.as_expr(f), float(c), float(d))

    for t in np.linspace(c, d, 202)[1:-1]:
        value = bump(t)
        if value < 0.0 or not math.isfinite(value):
            raise ModificationError(f"bump must be finite and nonnegative, f({t:.6g}) = {value}")

    if kind == ModificationKind.right:
        source = bump.mirrored(a, b)
    else:
        source = bump
    total = source.integral(source.d)
    if not total > 0.0:
        raise ModificationError("bump is identically zero on its support")
    kappa = 0.0
    if kind != ModificationKind.two_sided:
        G_b = (b * total - source.integral(source.d, weight_t=True)) / total
        kappa = (b - a - G_b) / total

    if kind == ModificationKind.right:
        chi = ModificationFn(kind, a, b, source, total, kappa)
    else:
        chi = ModificationFn(kind, a, b, bump, total, kappa)
    logger.debug(f"built {kind.value} modification on [{a:.6g}, {b:.6g}], total mass {total:.6e}")
    return chi


def compose_modifications(outer, inner):
    """Composition of two modification functions of the same kind on the same interval"""
    if outer.kind != inner.kind or outer.a != inner.a or outer.b != inner.b:
        raise ModificationError(
            f"cannot compose {outer.kind.value} on [{outer.a}, {outer.b}] with {inner.kind.value} on [{inner.a}, {inner.b}]"
        )
    return check_modification(ComposedModification(outer, inner))


def check_modification(chi, samples: int = 1000):
    """Monotonicity on a sample scan, endpoint interpolation and end flatness"""
    a, b = chi.a, chi.b
    ts = np.linspace(a, b, samples)
    values = np.array([chi.value(t) for t in ts])
    drops = np.diff(values)
    if np.any(drops < -ENDPOINT_TOL):
        k = int(np.argmin(drops))
        raise ModificationError(f"modification decreases near t = {ts[k]:.6g}")
    if abs(values[0] - a) > ENDPOINT_TOL or abs(values[-1] - b) > ENDPOINT_TOL:
        raise ModificationError(f"endpoints map to ({values[0]:.12g}, {values[-1]:.12g}), expected ({a}, {b})")

    left_margin, right_margin = chi.flat_margin
    near_a = np.linspace(a, a + left_margin, 5)
    near_b = np.linspace(b - right_margin, b, 5)
    kind = chi.kind
    if kind in (ModificationKind.two_sided, ModificationKind.left):
        if any(abs(chi.value(t) - a) > ENDPOINT_TOL for t in near_a):
            raise ModificationError("modification is not constant near a")
    else:
        if any(abs(chi.value(t) - t) > ENDPOINT_TOL for t in near_a):
            raise ModificationError("modification is not the identity near a")
    if kind in (ModificationKind.two_sided, ModificationKind.right):
        if any(abs(chi.value(t) - b) > ENDPOINT_TOL for t in near_b):
            raise ModificationError("modification is not constant near b")
    else:
        if any(abs(chi.value(t) - t) > ENDPOINT_TOL for t in near_b):
            raise ModificationError("modification is not the identity near b")
    return chi


@lru_cache(maxsize=1024)
def interval_modification(lo: float, hi: float) -> ModificationFn:
    return build_modification(ModificationKind.two_sided, lo, hi)


@dataclass(frozen=True)
class SittingInstants:
    """
    Piecewise reparametrization chi_{tau_{j-1}, tau_j} between consecutive
    cuts of a standard component; constant outside [tau_0, tau_n]
    """
    component: Component

    def _taus(self, s: float) -> List[float]:
        return sorted(standard_cuts(self.component, s))

    def _piece(self, t: float, s: float):
        taus = self._taus(s)
        if t <= taus[0]:
            return None, taus[0]
        if t >= taus[-1]:
            return None, taus[-1]
        j = bisect.bisect_right(taus, t)
        lo, hi = taus[j - 1], taus[j]
        if hi - lo < settings.ROOT_TOL:
            return None, t
        return interval_modification(lo, hi), t

    def value(self, t: float, s: float = 0.0) -> float:
        chi, t0 = self._piece(t, s)
        return t0 if chi is None else chi.value(t)

    def derivative(self, t: float, s: float = 0.0) -> float:
        chi, t0 = self._piece(t, s)
        if chi is None:
            taus = self._taus(s)
            return 0.0 if t <= taus[0] or t >= taus[-1] else 1.0
        return chi.derivative(t)


def insert_sitting_instants(bordism: Bordism) -> Bordism:
    """Replace gamma by gamma o chi on every standard component; cut data unchanged"""
    components = []
    for component in bordism.components:
        if component.kind != ComponentKind.standard:
            components.append(component)
            continue
        path = component.path.with_reparametrization(SittingInstants(component))
        components.append(replace(component, path=path))
    return Bordism(tuple(components), bordism.grid)


# Families

def glue_family(first: Bordism, second: Bordism, overlap: SmoothExpr, partition: BlendPartition) -> Bordism:
    """
    Glue two presentations of a standard family over S_1 and S_2

    `overlap` is F(t, s), the change of coordinates from the first
    presentation to the second. The glued cuts are
    chi_1 rho^1_a + chi_2 rho^2_a(F(t, s), s) along the first path.
    """
    c1, c2 = _single_standard(first), _single_standard(second)
    if c1.level != c2.level:
        raise InvariantViolation("family gluing", f"presentations have levels {c1.level} and {c2.level}")
    grid1, grid2 = tuple(first.fibers()), tuple(second.fibers())
    union = tuple(sorted(set(grid1) | set(grid2)))
    range1, range2 = (min(grid1), max(grid1)), (min(grid2), max(grid2))

    for s in union:
        w1, w2 = partition.weights(s)
        if abs(w1 + w2 - 1.0) > PARTITION_TOL:
            raise InvariantViolation("partition of unity", f"chi_1 + chi_2 = {w1 + w2:.15g} at s = {s:.6g}")
        if w1 < -PARTITION_TOL or w2 < -PARTITION_TOL:
            raise InvariantViolation("partition of unity", f"negative weight at s = {s:.6g}")
        if abs(w1) > PARTITION_TOL and not range1[0] <= s <= range1[1]:
            raise InvariantViolation("partition of unity", f"chi_1 is nonzero at s = {s:.6g} outside S_1")
        if abs(w2) > PARTITION_TOL and not range2[0] <= s <= range2[1]:
            raise InvariantViolation("partition of unity", f"chi_2 is nonzero at s = {s:.6g} outside S_2")

    overlap = ex.as_expr(overlap)
    cuts = tuple(GluedCut(r1, r2, overlap, partition) for r1, r2 in zip(c1.cuts.cuts, c2.cuts.cuts))
    spans = [c1.span(s) for s in union]
    lo, hi = min(p for p, _ in spans), max(q for _, q in spans)
    path = PathData(c1.path.components, c1.path.period, union, c1.path.reparametrization)
    glued = Component(ComponentKind.standard, path, CutFamily(cuts), lo, hi,
                      c1.oriented, c1.reversed, c1.window)
    logger.info(f"glued family over {len(union)} fibers, overlap [{max(range1[0], range2[0]):.6g}, {min(range1[1], range2[1]):.6g}]")
    return Bordism((glued,), union)


def _single_standard(bordism: Bordism) -> Component:
    if len(bordism.components) != 1 or bordism.components[0].kind != ComponentKind.standard \
            or bordism.components[0].cuts.taus is None:
        raise InvariantViolation("family gluing", "each presentation must be a single standard component")
    return bordism.components[0]
