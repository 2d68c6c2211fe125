"""Continuous algebraic Riccati equation by Newton-Kleinman iteration.

Each Newton step is a Lyapunov solve (Bartels-Stewart, via scipy). The
starting gain comes from Bass's eigenvalue-shift construction, which
stabilizes any controllable pair.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_continuous_lyapunov

from .errors import NotStabilizable


def care_residual(A, B, Q, R, P) -> float:
    """Frobenius norm of A'P + PA - P B R^-1 B' P + Q."""
    Res = A.T @ P + P @ A - P @ B @ np.linalg.solve(R, B.T @ P) + Q
    return float(np.linalg.norm(Res, "fro"))


def is_hurwitz(M) -> bool:
    return bool(np.all(np.linalg.eigvals(M).real < 0.0))


def initial_stabilizing_gain(A, B) -> np.ndarray:
    """Bass's method: shift A until -(A + sI) is stable, solve a Lyapunov equation."""
    n = A.shape[0]
    if is_hurwitz(A):
        return np.zeros((B.shape[1], n))
    shift = 1.0 + np.max(np.abs(np.linalg.eigvals(A)))
    As = -(A + shift * np.eye(n))
    # As Z + Z As' = -2 B B'
    Z = solve_continuous_lyapunov(As, -2.0 * B @ B.T)
    K = B.T @ np.linalg.pinv(Z)
    if not is_hurwitz(A - B @ K):
        raise NotStabilizable("could not construct an initial stabilizing gain")
    return K


def solve_care(A, B, Q, R, max_iter: int = 100, tol: float = 1e-9,
               K0=None) -> np.ndarray:
    """Stabilizing solution P of A'P + PA - P B R^-1 B' P + Q = 0.

    Converged when the residual is below ``tol * (1 + |P|_F)``.
    """
    A = np.asarray(A, float)
    B = np.asarray(B, float).reshape(A.shape[0], -1)
    Q = np.atleast_2d(np.asarray(Q, float))
    R = np.atleast_2d(np.asarray(R, float))
    K = initial_stabilizing_gain(A, B) if K0 is None else np.asarray(K0, float)
    P = None
    for _ in range(max_iter):
        Ak = A - B @ K
        P = solve_continuous_lyapunov(Ak.T, -(Q + K.T @ R @ K))
        P = 0.5 * (P + P.T)
        K = np.linalg.solve(R, B.T @ P)
        if care_residual(A, B, Q, R, P) < tol * (1.0 + np.linalg.norm(P, "fro")):
            if not is_hurwitz(A - B @ K):
                break
            return P
    raise NotStabilizable(f"Newton-Kleinman did not converge in {max_iter} iterations")


def lqr_gain(A, B, Q, R, **kw) -> tuple[np.ndarray, np.ndarray]:
    P = solve_care(A, B, Q, R, **kw)
    K = np.linalg.solve(np.atleast_2d(R), np.asarray(B).reshape(len(P), -1).T @ P)
    return K, P
