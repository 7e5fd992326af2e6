"""Small dense matrix equations: Lyapunov, filter Riccati, Hurwitz and PBH tests.

Sizes here are tiny (the largest system is the stacked observer error matrix,
w * n_f <= ~40), so Lyapunov equations are solved by Kronecker vectorization;
Bartels-Stewart would be the upgrade path for anything larger.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NoConvergence, NotDetectable, NotHurwitz

LYAP_COND_LIMIT = 1e15
LYAP_RESIDUAL_RTOL = 1e-9
RANK_RTOL = 1e-9


def check_detectability(S, F, rtol: float = RANK_RTOL) -> bool:
    """PBH test: every eigenvalue of S with Re >= 0 must be observable through F."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    F = np.atleast_2d(np.asarray(F, dtype=float))
    w = S.shape[0]
    if F.shape[1] != w:
        raise ValueError(f"F has {F.shape[1]} columns, S is {w}x{w}")
    for lam in np.linalg.eigvals(S):
        if lam.real < 0:
            continue
        pencil = np.vstack([lam * np.eye(w) - S, F.astype(complex)])
        sv = np.linalg.svd(pencil, compute_uv=False)
        if sv[-1] <= rtol * max(sv[0], 1.0):
            return False
    return True


def _lyapunov_operator(A):
    # row-major vec: vec(A^T X + X A) = (A^T (x) I + I (x) A^T) vec(X)
    m = A.shape[0]
    eye = np.eye(m)
    return np.kron(A.T, eye) + np.kron(eye, A.T)


def _lyapunov_raw(A, Q):
    m = A.shape[0]
    X = np.linalg.solve(_lyapunov_operator(A), -Q.reshape(-1)).reshape(m, m)
    return 0.5 * (X + X.T)


def solve_lyapunov(A, Q) -> np.ndarray:
    """Solve A^T X + X A = -Q for symmetric positive definite X.

    Raises NotHurwitz when the linear system is singular, the solution does
    not reproduce Q, or it is not positive definite.  A positive definite X
    with small residual certifies A Hurwitz whatever the conditioning.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    if np.linalg.cond(_lyapunov_operator(A)) > LYAP_COND_LIMIT:
        raise NotHurwitz("Lyapunov operator is singular: A has eigenvalues summing to zero")
    try:
        X = _lyapunov_raw(A, Q)
    except np.linalg.LinAlgError:
        raise NotHurwitz("Lyapunov operator is singular") from None
    scale = max(np.linalg.norm(Q), 2.0 * np.linalg.norm(A) * np.linalg.norm(X))
    if lyapunov_residual(A, X, Q) > LYAP_RESIDUAL_RTOL * scale:
        raise NotHurwitz("Lyapunov equation has no accurate solution")
    try:
        np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        raise NotHurwitz("Lyapunov solution is not positive definite") from None
    return X


def lyapunov_residual(A, X, Q) -> float:
    return float(np.linalg.norm(A.T @ X + X @ A + Q))


def is_hurwitz(A) -> bool:
    """Lyapunov characterization: A is Hurwitz iff A^T X + X A = -I has X > 0."""
    try:
        solve_lyapunov(A, np.eye(np.atleast_2d(A).shape[0]))
    except NotHurwitz:
        return False
    return True


def matrix_exponential(A, t: float = 1.0) -> np.ndarray:
    return scipy.linalg.expm(np.asarray(A, dtype=float) * t)


@dataclass(frozen=True)
class RiccatiSolution:
    P: np.ndarray
    residual_norm: float
    iterations: int


def riccati_residual(P, S, F) -> np.ndarray:
    """Left-hand side of P S^T + S P - P F^T F P + I = 0."""
    return P @ S.T + S @ P - P @ F.T @ F @ P + np.eye(S.shape[0])


def _initial_gain(A, B):
    """Stabilizing gain for A - B K by a Bass-type pole shift.

    With A + beta I anti-stable and X solving (A + beta I) X + X (A + beta I)^T
    = 2 B B^T, the gain K = B^T X^-1 moves every closed-loop eigenvalue to real
    part -beta.  The shift is kept just large enough, since bigger shifts give
    huge, badly conditioned gains on weakly controllable pairs.
    """
    n = A.shape[0]
    if is_hurwitz(A):
        return np.zeros((B.shape[1], n))
    beta = 1.0 + max(0.0, -float(np.min(np.linalg.eigvals(A).real)))
    Ashift = -(A + beta * np.eye(n))
    X = scipy.linalg.solve_continuous_lyapunov(Ashift, -2.0 * B @ B.T)
    X = 0.5 * (X + X.T)
    # X is singular when (A, B) is only stabilizable; a small ridge keeps the
    # stable uncontrollable part untouched to first order.
    ridge = 1e-10 * max(1.0, np.linalg.norm(X, 2))
    return B.T @ np.linalg.inv(X + ridge * np.eye(n))


def solve_riccati(S, F, tol: float = 1e-13, max_iter: int = 100,
                  residual_tol: float = 1e-8) -> RiccatiSolution:
    """Stabilizing solution of P S^T + S P - P F^T F P + I = 0 by Newton-Kleinman.

    Works on the dual control form A = S^T, B = F^T: with K stabilizing,
    solve (A - B K)^T P + P (A - B K) = -(I + K^T K) and update K = B^T P.
    The residual bound is ``residual_tol`` scaled by max(1, |P|^2 |F|^2),
    which is the absolute bound whenever the quadratic term is O(1).
    """
    S = np.atleast_2d(np.asarray(S, dtype=float))
    F = np.atleast_2d(np.asarray(F, dtype=float))
    if not check_detectability(S, F):
        raise NotDetectable("(S, F) fails the PBH detectability test")
    A, B = S.T, F.T
    w = S.shape[0]
    K = _initial_gain(A, B)
    P = None
    last_step = np.inf
    # intermediate iterates may be badly conditioned; only the limit is certified
    for it in range(1, max_iter + 1):
        P_new = _lyapunov_raw(A - B @ K, np.eye(w) + K.T @ K)
        K = B.T @ P_new
        if P is not None:
            step = np.linalg.norm(P_new - P)
            # stop at the tolerance or once round-off stops the quadratic phase
            size = max(1.0, np.linalg.norm(P_new))
            if step <= tol * size or (step <= 1e-8 * size and step >= last_step):
                P = P_new
                break
            last_step = step
        P = P_new
    res = float(np.linalg.norm(riccati_residual(P, S, F)))
    scale = max(1.0, np.linalg.norm(P, 2) ** 2 * np.linalg.norm(F, 2) ** 2)
    if not res <= residual_tol * scale:
        raise NoConvergence(f"Newton-Kleinman stalled after {it} iterations, residual {res:.2e}",
                            iterations=it, residual=res)
    try:
        np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        raise NoConvergence("Riccati iterate is not positive definite", iterations=it,
                            residual=res) from None
    if not is_hurwitz(S - P @ F.T @ F):
        raise NoConvergence("converged to a non-stabilizing solution", iterations=it, residual=res)
    return RiccatiSolution(P, res, it)
