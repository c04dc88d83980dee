"""Graph/electrical primitives against closed forms and reduction oracles."""

import numpy as np
import pytest

from rdnet.netcore import (
    INFINITE_RESISTANCE,
    IndexOutOfRange,
    MeasurementSet,
    Network,
    SingularNetwork,
    boundary_pairs,
    incidence_column,
    is_connected,
    is_infinite,
    kirchhoff_index,
    laplacian,
    laplacian_pinv,
    measurements_from_json,
    measurements_to_json,
    network_from_json,
    network_to_json,
    pair_distances,
    resistance_distance,
    resistance_matrix,
    to_dot,
)
from oracles import random_cppr, series_parallel_resistance


def k3(g=1.0):
    return Network(3, 0, [(1, 2, g), (2, 3, g), (1, 3, g)])


def test_laplacian_single_edge():
    net = Network(2, 0, [(1, 2, 1.0)])
    assert laplacian(net).tolist() == [[1.0, -1.0], [-1.0, 1.0]]


def test_laplacian_triangle():
    L = laplacian(k3())
    assert np.allclose(np.diag(L), 2.0)
    assert np.allclose(L - np.diag(np.diag(L)), -(1 - np.eye(3)))


def test_laplacian_rows_sum_zero():
    rng = np.random.default_rng(0)
    for _ in range(20):
        net = random_cppr(rng, int(rng.integers(3, 7)))
        L = laplacian(net)
        assert np.max(np.abs(L.sum(axis=1))) < 1e-12


def test_laplacian_pinv_single_edge():
    net = Network(2, 0, [(1, 2, 1.0)])
    # closed form via (L + J/2)^-1 - J/2 on two nodes
    expected = 0.25 * np.array([[1.0, -1.0], [-1.0, 1.0]])
    assert np.allclose(laplacian_pinv(laplacian(net)), expected, atol=1e-12)


def test_laplacian_pinv_properties():
    rng = np.random.default_rng(1)
    for _ in range(10):
        net = random_cppr(rng, int(rng.integers(3, 7)))
        L = laplacian(net)
        P = laplacian_pinv(L)
        assert np.max(np.abs(L @ P @ L - L)) < 1e-9
        assert np.max(np.abs(P @ np.ones(net.m))) < 1e-9
        # pinv of pinv returns the original (both share the range of L)
        assert np.max(np.abs(laplacian_pinv(P) - L)) < 1e-8


def test_laplacian_pinv_disconnected_raises():
    L = laplacian(Network(4, 0, [(1, 2, 1.0), (3, 4, 1.0)]))
    with pytest.raises(SingularNetwork):
        laplacian_pinv(L)


def test_resistance_distance_single_edge():
    net = Network(2, 0, [(1, 2, 2.0)])
    assert resistance_distance(net, 1, 2) == pytest.approx(0.5, abs=1e-12)


def test_resistance_distance_triangle_series_parallel():
    # 1 ohm in parallel with 2 ohm: 2/3
    for i, j in boundary_pairs(3):
        assert resistance_distance(k3(), i, j) == pytest.approx(2.0 / 3.0, abs=1e-12)


def test_resistance_distance_matches_series_parallel_oracle():
    rng = np.random.default_rng(2)
    for _ in range(15):
        net = random_cppr(rng, int(rng.integers(3, 7)))
        edges = [(u, v, 1.0 / g) for u, v, g in net.edges]
        expected = series_parallel_resistance(edges, 1, 2)
        if expected is None:
            continue
        assert resistance_distance(net, 1, 2) == pytest.approx(expected, abs=1e-9)


def test_resistance_matrix_small_cases():
    net = Network(2, 0, [(1, 2, 1.0)])
    assert np.allclose(resistance_matrix(net), [[0.0, 1.0], [1.0, 0.0]])
    R = resistance_matrix(k3())
    assert np.allclose(np.diag(R), 0.0)
    assert np.allclose(R[0, 1], 2.0 / 3.0)


def test_resistance_matrix_consistent_with_pairwise():
    rng = np.random.default_rng(3)
    net = random_cppr(rng, 6)
    R = resistance_matrix(net)
    assert np.allclose(R, R.T, atol=1e-12)
    for i in range(1, net.m + 1):
        for j in range(i + 1, net.m + 1):
            assert abs(R[i - 1, j - 1] - resistance_distance(net, i, j)) < 1e-12


def test_kirchhoff_index_small_cases():
    assert kirchhoff_index(Network(2, 0, [(1, 2, 1.0)])) == pytest.approx(1.0, abs=1e-9)
    assert kirchhoff_index(k3()) == pytest.approx(2.0, abs=1e-9)


def test_kirchhoff_index_equals_pairwise_sum():
    rng = np.random.default_rng(4)
    for _ in range(100):
        net = random_cppr(rng, int(rng.integers(3, 8)), n_i=int(rng.integers(0, 3)))
        R = resistance_matrix(net)
        assert kirchhoff_index(net) == pytest.approx(R.sum() / 2.0, abs=1e-9)


def test_incidence_columns():
    net = k3()
    assert incidence_column(net, 0).tolist() == [1.0, -1.0, 0.0]
    assert incidence_column(net, 2).tolist() == [0.0, 1.0, -1.0]
    with pytest.raises(IndexOutOfRange):
        incidence_column(net, 3)


def test_incidence_reconstructs_laplacian():
    rng = np.random.default_rng(5)
    for _ in range(10):
        net = random_cppr(rng, int(rng.integers(3, 7)))
        L = sum(g * np.outer(incidence_column(net, k), incidence_column(net, k))
                for k, (_, _, g) in enumerate(net.edges))
        assert np.max(np.abs(L - laplacian(net))) < 1e-12


def test_rayleigh_monotonicity():
    rng = np.random.default_rng(6)
    for _ in range(10):
        net = random_cppr(rng, 5)
        R = resistance_matrix(net)
        idx = int(rng.integers(len(net.edges)))
        u, v, g = net.edges[idx]
        bumped = net.with_edge(u, v, g * 1.5)
        R2 = resistance_matrix(bumped)
        assert np.all(R2 <= R + 1e-10)


def test_pair_distances_infinite_sentinel():
    net = Network(4, 0, [(1, 2, 1.0), (3, 4, 2.0)])
    dists = pair_distances(net, boundary_pairs(4))
    by_pair = dict(zip(boundary_pairs(4), dists))
    assert by_pair[(1, 2)] == pytest.approx(1.0)
    assert by_pair[(3, 4)] == pytest.approx(0.5)
    assert is_infinite(by_pair[(1, 3)])
    with pytest.raises(TypeError):
        INFINITE_RESISTANCE + 1.0
    assert INFINITE_RESISTANCE > 1e12
    assert abs(INFINITE_RESISTANCE) is INFINITE_RESISTANCE


def test_network_validation():
    with pytest.raises(ValueError):
        Network(2, 0, [(1, 1, 1.0)])
    with pytest.raises(ValueError):
        Network(2, 0, [(1, 2, 0.0)])
    with pytest.raises(ValueError):
        Network(2, 0, [(1, 2, 1.0), (2, 1, 2.0)])
    with pytest.raises(IndexOutOfRange):
        Network(2, 0, [(1, 3, 1.0)])


def test_network_json_roundtrip():
    rng = np.random.default_rng(7)
    net = random_cppr(rng, 5, n_i=1)
    assert network_from_json(network_to_json(net)) == net


def test_measurements_json_roundtrip():
    ms = MeasurementSet(4, 2, frozenset({1, 3, 4}),
                        {(1, 3): 1.4984, (1, 4): 1.351, (3, 4): 1.0795},
                        19.8, 0.25, 2.0)
    back = measurements_from_json(measurements_to_json(ms))
    assert back == ms
    assert back.unavailable_boundary == (2,)
    assert back.r_max == pytest.approx(4.0)


def test_connectivity_helpers():
    assert is_connected(k3())
    assert not is_connected(Network(4, 0, [(1, 2, 1.0), (3, 4, 1.0)]))


def test_dot_export_is_text():
    text = to_dot(k3())
    assert text.startswith("graph") and "1 -- 2" in text
