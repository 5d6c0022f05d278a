"""
Dense linear algebra helpers: invertibility, symmetric forms, tensor bookkeeping
"""

from typing import Sequence, Tuple

import numpy as np

from . import settings
from .errors import AsymmetryError, NondegeneracyError, SingularMatrixError

SYMMETRY_TOL = 1e-12


def condition_estimate(M: np.ndarray) -> float:
    return float(np.linalg.cond(M))


def checked_inverse(M: np.ndarray, tol: float = None, what: str = "matrix") -> np.ndarray:
    """
    Inverse of M, provided |det M| > tol

    Raises SingularMatrixError carrying the determinant and a condition
    estimate otherwise.
    """
    tol = settings.DET_TOL if tol is None else tol
    det = float(np.linalg.det(M))
    if not abs(det) > tol:
        raise SingularMatrixError(f"{what} is not invertible", det, condition_estimate(M))
    return np.linalg.inv(M)


def check_symmetric(B: np.ndarray, tol: float = SYMMETRY_TOL, what: str = "bilinear form") -> None:
    deviation = float(np.max(np.abs(B - B.T))) if B.size else 0.0
    if deviation > tol * max(1.0, float(np.max(np.abs(B)))):
        raise AsymmetryError(f"{what} is not symmetric", deviation)


def indefinite_orthonormalize(B: np.ndarray, det_tol: float = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Generalized orthonormal basis for a symmetric nondegenerate form

    Returns (basis, signs) with basis columns b_i satisfying
    b_i^T B b_j = signs_i * delta_ij, signs_i in {+1, -1}. Positive
    directions come first; each column is normalized so that its largest
    entry is positive.
    """
    B = np.asarray(B, dtype=float)
    check_symmetric(B)
    det_tol = settings.DET_TOL if det_tol is None else det_tol
    det = float(np.linalg.det(B))
    if not abs(det) > det_tol:
        raise NondegeneracyError("bilinear form must be nondegenerate", det, condition_estimate(B))

    eigenvalues, vectors = np.linalg.eigh(0.5 * (B + B.T))
    order = [i for i in range(len(eigenvalues)) if eigenvalues[i] > 0] + \
            [i for i in range(len(eigenvalues)) if eigenvalues[i] < 0]

    columns = []
    signs = []
    for i in order:
        v = vectors[:, i]
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        columns.append(v / np.sqrt(abs(eigenvalues[i])))
        signs.append(1.0 if eigenvalues[i] > 0 else -1.0)
    return np.column_stack(columns), np.array(signs)


def signature(B: np.ndarray) -> Tuple[int, int]:
    """(positive index, negative index) of inertia"""
    _, signs = indefinite_orthonormalize(B)
    return int(np.sum(signs > 0)), int(np.sum(signs < 0))


def swap_matrix(n: int) -> np.ndarray:
    """Permutation matrix of the flip V (x) V -> V (x) V, u (x) v -> v (x) u"""
    P = np.zeros((n * n, n * n))
    for i in range(n):
        for j in range(n):
            P[j * n + i, i * n + j] = 1.0
    return P


def kron_all(matrices: Sequence[np.ndarray]) -> np.ndarray:
    result = np.ones((1, 1))
    for M in matrices:
        result = np.kron(result, M)
    return result


def convergence_order(errors: Sequence[float], steps: Sequence[float]) -> float:
    """Least-squares slope of log(error) against log(step); nan below two positive errors"""
    e = np.asarray(errors, dtype=float)
    h = np.asarray(steps, dtype=float)
    mask = e > 0
    if mask.sum() < 2:
        return float("nan")
    slope, _ = np.polyfit(np.log(h[mask]), np.log(e[mask]), 1)
    return float(slope)
