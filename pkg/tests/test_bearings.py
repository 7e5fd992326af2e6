import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bearing_formation.bearings import (BearingSet, bearing_laplacian, certify_localizability,
                                        projector, target_followers)
from bearing_formation.errors import MissingBearing, NonUnitBearing, NotLocalizable
from bearing_formation.graph import GraphTopology, followers_reachable_from_leaders

S2 = np.sqrt(2) / 2


def test_projector_examples():
    np.testing.assert_array_equal(projector([1.0, 0.0]), [[0, 0], [0, 1]])
    np.testing.assert_allclose(projector([S2, S2]), [[0.5, -0.5], [-0.5, 0.5]], atol=1e-15)


def test_projector_rejects_non_unit():
    with pytest.raises(NonUnitBearing):
        projector([1.0, 0.1])


@settings(max_examples=1000, deadline=None)
@given(st.integers(2, 3), st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_projector_properties(d, raw):
    v = np.array(raw[:d])
    if np.linalg.norm(v) < 1e-3:
        v = np.eye(d)[0]
    g = v / np.linalg.norm(v)
    P = projector(g)
    np.testing.assert_allclose(P, P.T, atol=1e-12)
    np.testing.assert_allclose(P @ P, P, atol=1e-12)
    assert np.linalg.norm(P @ g) <= 1e-12
    np.testing.assert_allclose(np.linalg.eigvalsh(P), [0.0] + [1.0] * (d - 1), atol=1e-12)


def test_default_bearings_annihilated(scenario):
    for g in scenario.bearings.entries.values():
        assert np.linalg.norm(projector(g) @ g) <= 1e-12


def test_bearing_set_validation():
    with pytest.raises(NonUnitBearing):
        BearingSet(2, {(1, 2): [2.0, 0.0]})
    with pytest.raises(ValueError):
        BearingSet(2, {(1, 2): [1.0, 0.0], (2, 1): [1.0, 0.0]})
    b = BearingSet(2, {(1, 2): [0.0, 1.0]})
    np.testing.assert_array_equal(b.get(2, 1), [0.0, -1.0])
    with pytest.raises(MissingBearing):
        b.get(1, 3)


def test_missing_bearing_in_laplacian():
    g = GraphTopology(3, 1, [(1, 2), (2, 3)])
    with pytest.raises(MissingBearing) as e:
        bearing_laplacian(g, BearingSet(2, {(1, 2): [1.0, 0.0]}))
    assert e.value.edge == (2, 3)


def test_rectangle_laplacian(system):
    B = system.B
    np.testing.assert_allclose(B.matrix, B.matrix.T, atol=0)
    assert np.linalg.eigvalsh(B.matrix)[0] >= -1e-10
    assert np.abs(B.matrix @ np.tile([1.0, 1.0], 6)).max() <= 1e-12
    assert B.lambda_min_ff == pytest.approx(1 - S2, abs=1e-12)


def test_collinear_path_not_localizable():
    g = GraphTopology(3, 1, [(1, 2), (2, 3)])
    b = BearingSet(2, {(2, 1): [1.0, 0.0], (3, 2): [1.0, 0.0]})
    B = bearing_laplacian(g, b)
    assert abs(B.lambda_min_ff) < 1e-12
    assert not certify_localizability(B).localizable
    with pytest.raises(NotLocalizable):
        target_followers(B, [0.0, 0.0])


def test_certificate_thresholds(system):
    B = system.B
    cert = certify_localizability(B, 1e-8, graph=system.graph)
    assert cert.localizable and cert.reachable
    assert not certify_localizability(B, B.lambda_min_ff + 1e-6).localizable


def test_isolated_follower_not_localizable(scenario):
    g = scenario.graph.without_edges([e for e in scenario.graph.edges if 6 in e])
    entries = {k: v for k, v in scenario.bearings.entries.items() if 6 not in k}
    cert = certify_localizability(bearing_laplacian(g, BearingSet(2, entries)), graph=g)
    assert not cert.localizable and cert.reachable is False


def test_orientation_invariance(scenario):
    flipped = {(j, i): -g for (i, j), g in scenario.bearings.entries.items()}
    a = bearing_laplacian(scenario.graph, scenario.bearings).matrix
    b = bearing_laplacian(scenario.graph, BearingSet(2, flipped)).matrix
    assert np.array_equal(a, b)


def test_default_targets_realize_bearings(scenario, system):
    q_l = scenario.leader.q_l0
    q_f = target_followers(system.B, q_l)
    q = np.concatenate([q_l, q_f])
    assert np.linalg.norm(system.B.fl @ q_l + system.B.ff @ q_f) <= 1e-9 * (1 + np.linalg.norm(q_l))
    assert np.abs(system.B.matrix @ q).max() <= 1e-9 * (1 + np.linalg.norm(q))
    realized = BearingSet.from_positions(scenario.graph, q)
    for (i, j) in scenario.graph.edges:
        np.testing.assert_allclose(realized.get(i, j), scenario.bearings.get(i, j), atol=1e-6)


def test_target_equivariance(system):
    B = system.B
    rng = np.random.default_rng(1)
    q_l = rng.normal(size=4) * 50
    base = target_followers(B, q_l)
    u = np.array([3.0, -7.0])
    np.testing.assert_allclose(target_followers(B, q_l + np.tile(u, 2)), base + np.tile(u, 4), atol=1e-9)
    c = q_l.reshape(2, 2).mean(axis=0)
    scaled = target_followers(B, (np.tile(c, 2) + 2.5 * (q_l - np.tile(c, 2))))
    np.testing.assert_allclose(scaled, np.tile(c, 4) + 2.5 * (base - np.tile(c, 4)), atol=1e-8)


@st.composite
def random_formations(draw):
    n = draw(st.integers(3, 7))
    nl = draw(st.integers(2, n - 1))
    d = draw(st.integers(2, 3))
    seed = draw(st.integers(0, 2**31))
    rng = np.random.default_rng(seed)
    q = rng.normal(size=(n, d)) * 10
    pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    keep = [p for p in pairs if rng.random() < 0.7]
    return GraphTopology(n, nl, keep), q


@settings(max_examples=100, deadline=None)
@given(random_formations())
def test_random_formations(fq):
    g, q = fq
    if not g.edges:
        return
    b = BearingSet.from_positions(g, q)
    B = bearing_laplacian(g, b)
    assert np.linalg.eigvalsh(B.matrix)[0] >= -1e-10
    assert np.abs(B.matrix @ q.ravel()).max() <= 1e-9 * (1 + np.abs(q).max())
    if not followers_reachable_from_leaders(g):
        assert not certify_localizability(B).localizable
    if certify_localizability(B).localizable:
        k = g.n_leaders
        q_f = target_followers(B, q[:k].ravel())
        np.testing.assert_allclose(q_f, q[k:].ravel(), atol=1e-6 * (1 + np.abs(q).max()))
