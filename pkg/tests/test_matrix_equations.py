import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from bearing_formation.errors import NotDetectable, NotHurwitz
from bearing_formation.matrix_equations import (check_detectability, is_hurwitz, lyapunov_residual,
                                                matrix_exponential, riccati_residual, solve_lyapunov,
                                                solve_riccati)

from conftest import F4, S4


def test_detectability_examples():
    assert check_detectability(S4, F4)
    assert not check_detectability([[0.0]], [[0.0]])
    assert check_detectability(-np.eye(3), np.zeros((1, 3)))


def test_lyapunov_examples():
    np.testing.assert_allclose(solve_lyapunov(-np.eye(2), np.eye(2)), 0.5 * np.eye(2), atol=1e-15)
    A = np.array([[0.0, 1.0], [-1.0, -1.0]])
    X = solve_lyapunov(A, np.eye(2))
    # unknowns (x11, x12, x22) of A^T X + X A = -I, solved by hand
    M = np.array([[0.0, -2.0, 0.0], [1.0, -1.0, -1.0], [0.0, 2.0, -2.0]])
    x11, x12, x22 = np.linalg.solve(M, [-1.0, 0.0, -1.0])
    np.testing.assert_allclose(X, [[x11, x12], [x12, x22]], atol=1e-12)
    np.testing.assert_allclose(X, [[1.5, 0.5], [0.5, 1.0]], atol=1e-12)
    with pytest.raises(NotHurwitz):
        solve_lyapunov(np.eye(2), np.eye(2))


def test_lyapunov_random_hurwitz():
    rng = np.random.default_rng(0)
    for _ in range(100):
        m = rng.integers(1, 7)
        G = rng.normal(size=(m, m))
        A = -G.T @ G - 0.1 * np.eye(m)
        Q = np.eye(m)
        X = solve_lyapunov(A, Q)
        assert lyapunov_residual(A, X, Q) <= 1e-9 * max(1.0, np.linalg.norm(A) * np.linalg.norm(X))
        np.testing.assert_allclose(X, X.T, atol=0)


def test_riccati_examples():
    sol = solve_riccati([[0.0]], [[1.0]])
    assert sol.P[0, 0] == pytest.approx(1.0, abs=1e-12)
    sol = solve_riccati(-np.eye(2), np.zeros((1, 2)))
    np.testing.assert_allclose(sol.P, 0.5 * np.eye(2), atol=1e-12)
    with pytest.raises(NotDetectable):
        solve_riccati([[0.0]], [[0.0]])


def test_riccati_rectangle_pair():
    sol = solve_riccati(S4, F4)
    assert np.linalg.norm(riccati_residual(sol.P, S4, F4)) <= 1e-8
    np.testing.assert_allclose(sol.P, sol.P.T, atol=1e-12)
    assert np.linalg.eigvalsh(sol.P)[0] > 0
    ref = scipy.linalg.solve_continuous_are(S4.T, F4.T, np.eye(3), np.eye(2))
    np.testing.assert_allclose(sol.P, ref, atol=1e-8)
    LF = sol.P @ F4.T @ F4
    for lam in (1.0, 1.5, 3.0, 10.0):
        assert is_hurwitz(S4 - lam * LF)


def test_riccati_random_pairs():
    rng = np.random.default_rng(7)
    done = 0
    while done < 100:
        w, d = int(rng.integers(1, 7)), int(rng.integers(1, 4))
        S = rng.normal(size=(w, w))
        F = rng.normal(size=(d, w))
        # keep the dual pair comfortably stabilizable
        obs = np.vstack([F @ np.linalg.matrix_power(S, k) for k in range(w)])
        if np.linalg.svd(obs, compute_uv=False)[-1] < 0.05:
            continue
        sol = solve_riccati(S, F)
        assert np.linalg.norm(riccati_residual(sol.P, S, F)) <= 1e-8 * max(1.0, np.linalg.norm(sol.P) ** 2)
        assert np.linalg.eigvalsh(sol.P)[0] > 0
        done += 1


def test_hurwitz_examples():
    assert is_hurwitz(-np.eye(3))
    w = 1.3
    assert not is_hurwitz([[0.0, w], [-w, 0.0]])
    assert not is_hurwitz([[0.0]])


def routh_hurwitz(A):
    c = np.poly(A)[1:]  # monic characteristic polynomial coefficients
    if A.shape[0] == 2:
        return c[0] > 0 and c[1] > 0
    a2, a1, a0 = c
    return a2 > 0 and a0 > 0 and a2 * a1 > a0


@settings(max_examples=3000, deadline=None)
@given(st.integers(2, 3), st.integers(0, 2**32 - 1))
def test_hurwitz_matches_routh(m, seed):
    A = np.random.default_rng(seed).normal(size=(m, m))
    if abs(np.linalg.eigvals(A).real.max()) < 1e-3:
        return  # too close to the boundary for either test to be decisive
    assert is_hurwitz(A) == routh_hurwitz(A)


def test_matrix_exponential_examples(system):
    np.testing.assert_array_equal(matrix_exponential(np.zeros((3, 3))), np.eye(3))
    np.testing.assert_allclose(matrix_exponential(np.diag([-1.0, -2.0]), 1.0),
                               np.diag([np.exp(-1), np.exp(-2)]), rtol=1e-14)
    Bff = system.B.ff
    lam, V = np.linalg.eigh(Bff)
    ref = V @ np.diag(np.exp(-lam)) @ V.T
    E = matrix_exponential(-Bff, 1.0)
    assert np.linalg.norm(E - ref) <= 1e-9 * np.linalg.norm(ref)
