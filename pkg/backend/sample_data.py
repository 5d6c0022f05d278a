"""
Seeded sample data for the field theory toolkit
Bundles, paths, loops, reparametrizations and bordisms used by the
verification suite, the classifier and the tests
"""

import math
from typing import List, Tuple

import numpy as np

from bordism import Bordism, build_modification, circle, disjoint_union, left_elbow, right_elbow, standard
from bundle import BundleData, PathData
from geometry import expressions as ex

DEFAULT_DOMAIN = ((-2.0, 2.0), (-2.0, 2.0))
PATH_MARGIN = 0.5

# 90 degree generator of SO(2)
ROTATION = np.array([[0.0, -1.0], [1.0, 0.0]])


def _box(domain, dim: int):
    return tuple(domain) if domain is not None else tuple(DEFAULT_DOMAIN[:1] * dim)


def _inner(domain, margin: float) -> List[Tuple[float, float]]:
    return [(lo + margin, hi - margin) for lo, hi in domain]


def _polynomial(rng: np.random.Generator, dim: int, scale: float, quadratic: bool = True) -> ex.SmoothExpr:
    """c0 + sum c_mu x_mu (+ c x1 x2) with coefficients uniform in [-scale, scale]"""
    coords = [ex.coordinate(mu + 1) for mu in range(dim)]
    terms = [ex.ONE] + coords
    if quadratic and dim >= 2:
        terms.append(ex.multiply(coords[0], coords[1]))
    return ex.linear_combination(rng.uniform(-scale, scale, len(terms)), terms)


# Bundles

def rotation_bundle(domain=((-4.0, 4.0), (-4.0, 4.0))) -> BundleData:
    """
    omega_1 = -x2 C, omega_2 = x1 C with C the rotation generator, beta = I

    Along the unit circle the pulled-back coefficient is C, so transport over
    [0, pi] is -I and the holonomy over one period is the identity.
    """
    x1, x2 = ex.coordinate(1), ex.coordinate(2)
    omega = [
        [[ex.ZERO, x2], [ex.negate(x2), ex.ZERO]],
        [[ex.ZERO, ex.negate(x1)], [x1, ex.ZERO]],
    ]
    return BundleData.from_matrices(omega, np.eye(2).tolist(), domain, compatible=True)


def constant_rotation_bundle(domain=((-4.0, 4.0), (-4.0, 4.0))) -> BundleData:
    """omega_1 = C, omega_2 = 0, beta = I"""
    omega = [ROTATION.tolist(), np.zeros((2, 2)).tolist()]
    return BundleData.from_matrices(omega, np.eye(2).tolist(), domain, compatible=True)


def incompatible_bundle(domain=DEFAULT_DOMAIN) -> BundleData:
    """omega_1 = diag(1, 0) with beta = I: d beta - omega^T beta - beta omega = -2 E_11"""
    omega = [[[1.0, 0.0], [0.0, 0.0]], np.zeros((2, 2)).tolist()]
    return BundleData.from_matrices(omega, np.eye(2).tolist(), domain, compatible=False)


def random_form(rng: np.random.Generator, rank: int, indefinite: bool = False) -> np.ndarray:
    """Well-conditioned symmetric form; with `indefinite` it has at least one negative direction"""
    Q, _ = np.linalg.qr(rng.normal(size=(rank, rank)))
    magnitudes = rng.uniform(0.5, 2.0, rank)
    if indefinite:
        signs = np.ones(rank)
        signs[rng.choice(rank, size=max(1, rank // 2), replace=False)] = -1.0
        magnitudes = magnitudes * signs
    B = Q @ np.diag(magnitudes) @ Q.T
    return 0.5 * (B + B.T)


def random_compatible_bundle(rng: np.random.Generator, rank: int = 2, dim: int = 2, domain=None,
                             scale: float = 0.5, indefinite: bool = False) -> BundleData:
    """
    Constant beta and omega_mu = beta^-1 K_mu(x) with K_mu antisymmetric and
    polynomial, which makes the connection compatible with beta
    """
    domain = _box(domain, dim)
    B = random_form(rng, rank, indefinite)
    inverse = np.linalg.inv(B)
    omega = []
    for _ in range(dim):
        K = [[ex.ZERO] * rank for _ in range(rank)]
        for i in range(rank):
            for j in range(i + 1, rank):
                entry = _polynomial(rng, dim, scale)
                K[i][j] = entry
                K[j][i] = ex.negate(entry)
        omega.append([
            [ex.linear_combination(inverse[i, :], [K[k][j] for k in range(rank)]) for j in range(rank)]
            for i in range(rank)
        ])
    return BundleData.from_matrices(omega, B.tolist(), domain, compatible=True)


def random_bundle(rng: np.random.Generator, rank: int = 2, dim: int = 2, domain=None,
                  scale: float = 0.5) -> BundleData:
    """Generic polynomial connection with beta = I; not compatible in general"""
    domain = _box(domain, dim)
    omega = [[[_polynomial(rng, dim, scale) for _ in range(rank)] for _ in range(rank)] for _ in range(dim)]
    return BundleData.from_matrices(omega, np.eye(rank).tolist(), domain, compatible=False)


def random_gauge(rng: np.random.Generator, rank: int) -> np.ndarray:
    """Constant automorphism I + 0.3 N, N standard normal, well away from singular"""
    while True:
        alpha = np.eye(rank) + 0.3 * rng.normal(size=(rank, rank))
        if np.linalg.cond(alpha) < 10.0:
            return alpha


# Paths

def random_path(rng: np.random.Generator, domain=DEFAULT_DOMAIN, margin: float = PATH_MARGIN) -> PathData:
    """
    gamma(t) = x0 + (x1 - x0) t + w sin(pi t) for t in [0, 1]

    x0 and x1 lie `margin` inside the box and |w| <= margin / 2, so the
    image over [0, 1] keeps a margin / 2 distance to its faces.
    """
    inner = _inner(domain, margin)
    start = np.array([rng.uniform(lo, hi) for lo, hi in inner])
    end = np.array([rng.uniform(lo, hi) for lo, hi in inner])
    bend = rng.uniform(-0.5 * margin, 0.5 * margin, len(inner))
    wave = ex.sin(ex.multiply(ex.constant(math.pi), ex.T))
    components = [
        ex.linear_combination([x0, x1 - x0, w], [ex.ONE, ex.T, wave])
        for x0, x1, w in zip(start, end, bend)
    ]
    return PathData.from_exprs(components)


def random_loop(rng: np.random.Generator, domain=DEFAULT_DOMAIN, margin: float = PATH_MARGIN) -> PathData:
    """
    Perturbed circle of period 2 pi in the first two coordinates (a
    back-and-forth loop in dimension one); further coordinates are constant
    """
    inner = _inner(domain, margin + 0.8)
    center = np.array([rng.uniform(lo, hi) if lo < hi else 0.5 * (lo + hi) for lo, hi in inner])
    radius = rng.uniform(0.2, 0.6)
    wobble = rng.uniform(-0.1, 0.1)
    t = ex.T
    components = [ex.constant(c) for c in center]
    components[0] = ex.linear_combination([center[0], radius, wobble], [ex.ONE, ex.cos(t), ex.sin(ex.multiply(ex.constant(2.0), t))])
    if len(center) >= 2:
        components[1] = ex.linear_combination([center[1], radius], [ex.ONE, ex.sin(t)])
    else:
        components[0] = ex.linear_combination([center[0], radius], [ex.ONE, ex.sin(t)])
    return PathData.from_exprs(components, period=2.0 * math.pi)


def unit_circle_loop() -> PathData:
    """(cos t, sin t), period 2 pi"""
    return PathData.from_exprs([ex.cos(ex.T), ex.sin(ex.T)], period=2.0 * math.pi)


def random_increasing_map(rng: np.random.Generator) -> ex.SmoothExpr:
    """
    F(t) = t + c1 sin(pi t) + c2 t (1 - t) with |c1| pi + |c2| < 1, so that
    F is strictly increasing and maps [0, 1] onto itself
    """
    c1 = rng.uniform(-0.6, 0.6) / math.pi
    c2 = rng.uniform(-0.3, 0.3)
    t = ex.T
    return ex.linear_combination(
        [1.0, c1, c2],
        [t, ex.sin(ex.multiply(ex.constant(math.pi), t)), ex.multiply(t, ex.subtract(ex.ONE, t))],
    )


def random_bump(rng: np.random.Generator, a: float, b: float) -> Tuple[ex.SmoothExpr, Tuple[float, float]]:
    """
    Nonnegative bump on a random support inside (a, b): the standard bump
    times 1 + 0.5 sin(k t + phase)
    """
    length = b - a
    c = a + rng.uniform(0.05, 0.3) * length
    d = b - rng.uniform(0.05, 0.3) * length
    width = ex.multiply(ex.subtract(ex.T, ex.constant(c)), ex.subtract(ex.constant(d), ex.T))
    base = ex.exp(ex.negate(ex.divide(ex.constant((d - c) ** 2), width)))
    k, phase = rng.uniform(1.0, 6.0) / length, rng.uniform(0.0, 2.0 * math.pi)
    ripple = ex.add(ex.ONE, ex.multiply(ex.constant(0.5), ex.sin(ex.add(ex.multiply(ex.constant(k), ex.T), ex.constant(phase)))))
    return ex.multiply(base, ripple), (c, d)


def random_modification(rng: np.random.Generator, kind, a: float, b: float):
    f, support = random_bump(rng, a, b)
    return build_modification(kind, a, b, f, support)


# Bordisms

def random_interval(rng: np.random.Generator, domain=DEFAULT_DOMAIN, oriented: bool = False,
                    levels: int = 1) -> Bordism:
    """Standard component over a random path with `levels` + 1 sorted constant cuts in [0, 1]"""
    taus = sorted(rng.uniform(0.0, 1.0, levels + 1).tolist())
    return Bordism.of(standard(random_path(rng, domain), taus, oriented=oriented))


def random_bordisms(rng: np.random.Generator, domain=DEFAULT_DOMAIN, count: int = 10,
                    oriented: bool = False) -> List[Bordism]:
    """
    Level-one sample bordisms cycling through intervals, both elbows,
    circles and disjoint unions of an interval with an elbow
    """
    samples: List[Bordism] = []
    for k in range(count):
        choice = k % 5
        if choice == 0:
            samples.append(random_interval(rng, domain, oriented))
            continue
        if choice == 4:
            samples.append(disjoint_union(
                random_interval(rng, domain, oriented),
                Bordism.of(right_elbow(random_path(rng, domain), 0.2, 0.8, oriented=oriented)),
            ))
            continue
        if choice == 3:
            samples.append(Bordism.of(circle(random_loop(rng, domain), oriented=oriented)))
            continue
        a = float(rng.uniform(0.05, 0.35))
        b = float(rng.uniform(0.65, 0.95))
        factory = right_elbow if choice == 1 else left_elbow
        samples.append(Bordism.of(factory(random_path(rng, domain), a, b, oriented=oriented)))
    return samples


def sample_points(rng: np.random.Generator, domain=DEFAULT_DOMAIN, count: int = 10,
                  margin: float = PATH_MARGIN) -> np.ndarray:
    inner = _inner(domain, margin)
    return np.array([[rng.uniform(lo, hi) for lo, hi in inner] for _ in range(count)])
