"""
Fundamental solutions of linear matrix ODEs u' = A(t) u
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from . import settings
from .errors import EvaluationError, IntegrationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OdeProblem:
    """
    Linear problem u' = A(t) u on [a, b]

    `b < a` is allowed and integrates backwards, so that
    Phi(a, b) Phi(b, a) = I up to the integrator tolerance.
    """
    coefficient: Callable[[float], np.ndarray]
    a: float
    b: float
    rtol: float = settings.RTOL


def fundamental_solution(problem: OdeProblem, method: Optional[str] = None) -> np.ndarray:
    """
    Phi(b, a) for u' = A(t) u with adaptive embedded Runge-Kutta steps

    The increment Psi = Phi - I is integrated instead of Phi itself
    (Psi' = A (I + Psi), Psi(a) = 0). Error control is then relative to
    what the transport actually accumulated, which keeps short segments
    accurate down to roundoff. Phi(a, a) = I exactly.
    """
    a, b = float(problem.a), float(problem.b)
    first = _checked_coefficient(problem.coefficient, a)
    n = first.shape[0]
    identity = np.eye(n)
    if a == b:
        return identity

    def rhs(t, y):
        A = _checked_coefficient(problem.coefficient, t)
        return (A @ (identity + y.reshape(n, n))).ravel()

    solution = solve_ivp(
        rhs,
        (a, b),
        np.zeros(n * n),
        method=method or settings.ODE_METHOD,
        rtol=problem.rtol,
        atol=problem.rtol * 1e-6,
    )
    if solution.status != 0:
        raise IntegrationError(f"integration failed: {solution.message}", t=float(solution.t[-1]))

    logger.debug(f"fundamental solution on [{a:.6g}, {b:.6g}]: {solution.nfev} evaluations")
    return identity + solution.y[:, -1].reshape(n, n)


def _checked_coefficient(coefficient: Callable[[float], np.ndarray], t: float) -> np.ndarray:
    try:
        A = np.asarray(coefficient(t), dtype=float)
    except EvaluationError as e:
        raise IntegrationError(f"coefficient not evaluable: {e}", t=t) from e
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise IntegrationError(f"coefficient must be square, got shape {A.shape}", t=t)
    if not np.all(np.isfinite(A)):
        raise IntegrationError("coefficient is not finite", t=t)
    return A
