import warnings

import numpy as np
import pytest

from bearing_formation.errors import GainTooSmall, GraphError
from bearing_formation.graph import GraphTopology, laplacian_blocks
from bearing_formation.leader import LeaderModel
from bearing_formation.matrix_equations import is_hurwitz, solve_riccati
from bearing_formation.observer import (modal_hurwitz, observer_error_dynamics_matrix, observer_rhs,
                                        observer_rhs_compact, synthesize_observer)

from conftest import F4, S4


@pytest.fixture(scope="module")
def leader4():
    return LeaderModel(S4, F4, [10.0, 1.0, 0.0], [200.0, 100.0, 0.0, 0.0])


def test_rectangle_observer(graph4, leader4):
    cfg = synthesize_observer(graph4, leader4, 2.0)
    assert cfg.condition_ok and cfg.hurwitz
    assert modal_hurwitz(cfg, graph4, leader4)
    np.testing.assert_allclose(cfg.L, solve_riccati(S4, F4).P @ F4.T, atol=0)
    Sf = observer_error_dynamics_matrix(cfg, graph4, leader4)
    assert is_hurwitz(Sf)


def test_default_gamma_margin(graph4, leader4):
    lam = synthesize_observer(graph4, leader4, 1.0).lambda_min_Lff
    cfg = synthesize_observer(graph4, leader4, 1.1 / lam)
    assert cfg.condition_ok and cfg.hurwitz


def test_small_gamma_warns(graph4, leader4):
    with pytest.warns(GainTooSmall):
        cfg = synthesize_observer(graph4, leader4, 1e-4)
    assert not cfg.condition_ok


def test_unreachable_rejected(graph4, leader4):
    g = graph4.without_edges([e for e in graph4.edges if 6 in e])
    with pytest.raises(GraphError):
        synthesize_observer(g, leader4, 2.0)


def test_single_follower_threshold():
    g = GraphTopology(2, 1, [(1, 2)])
    m = LeaderModel([[0.0]], [[1.0]], [1.0], [0.0])
    assert synthesize_observer(g, m, 0.51).condition_ok
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        assert not synthesize_observer(g, m, 0.49).condition_ok


def test_scalar_tracker():
    g = GraphTopology(2, 1, [(1, 2)])
    m = LeaderModel([[0.0]], [[1.0]], [1.0], [0.0])
    cfg = synthesize_observer(g, m, 1.0)
    assert cfg.L[0, 0] == pytest.approx(1.0)
    np.testing.assert_allclose(observer_rhs(cfg, g, m, [3.0], [1.0]), [-2.0], atol=1e-12)
    np.testing.assert_allclose(observer_error_dynamics_matrix(cfg, g, m), [[-1.0]], atol=1e-12)


def test_zero_gamma_matrix(graph4, leader4):
    cfg = synthesize_observer(graph4, leader4, 2.0)
    zero = type(cfg)(0.0, cfg.P, cfg.L, cfg.lambda_min_Lff, False, False)
    np.testing.assert_array_equal(observer_error_dynamics_matrix(zero, graph4, leader4),
                                  np.kron(np.eye(4), S4))


def test_consensus_manifold(graph4, leader4):
    cfg = synthesize_observer(graph4, leader4, 2.0)
    eta = np.array([1.0, -2.0, 0.5])
    np.testing.assert_allclose(observer_rhs(cfg, graph4, leader4, np.tile(eta, 4), eta),
                               np.tile(S4 @ eta, 4), atol=1e-12)


def test_dual_paths_agree(graph4, leader4):
    cfg = synthesize_observer(graph4, leader4, 2.0)
    rng = np.random.default_rng(3)
    for _ in range(50):
        eh, eta = rng.normal(size=12) * 5, rng.normal(size=3) * 5
        a = observer_rhs(cfg, graph4, leader4, eh, eta)
        b = observer_rhs_compact(cfg, graph4, leader4, eh, eta)
        assert np.abs(a - b).max() <= 1e-12 * max(1.0, np.abs(a).max())


def brute_kron(A, B):
    out = np.zeros((A.shape[0] * B.shape[0], A.shape[1] * B.shape[1]))
    for i in range(A.shape[0]):
        for j in range(A.shape[1]):
            out[i * B.shape[0]:(i + 1) * B.shape[0], j * B.shape[1]:(j + 1) * B.shape[1]] = A[i, j] * B
    return out


def test_error_matrix_brute_force(graph4, leader4):
    cfg = synthesize_observer(graph4, leader4, 2.0)
    Lff = laplacian_blocks(graph4)[3].astype(float)
    ref = brute_kron(np.eye(4), S4) - 2.0 * brute_kron(Lff, cfg.L @ F4)
    np.testing.assert_allclose(observer_error_dynamics_matrix(cfg, graph4, leader4), ref, atol=1e-14)
