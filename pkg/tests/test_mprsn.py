"""Gadget and switch-network construction against the exact enumeration."""

from fractions import Fraction

import numpy as np
import pytest

from rdnet.mprsn import (
    InvalidRmax,
    TooFewNodes,
    build_mprsn,
    build_rsn,
    boundary_resistance_vector,
    evaluate_switches,
    maximal_circular_planar,
)
from rdnet.netcore import (
    INFINITE_RESISTANCE,
    DimensionMismatch,
    boundary_pairs,
    is_infinite,
    pair_distances,
)
from rdnet.planarity import is_planar
from oracles import is_planar_oracle, series_parallel_resistance

COMPONENT_A_VALUES_RMAX4 = {
    Fraction(1), Fraction(2), Fraction(2, 3), Fraction(3),
    Fraction(3, 4), Fraction(5, 3), Fraction(5, 8),
}


def test_maximal_circular_planar_counts():
    assert len(maximal_circular_planar(3)) == 3
    assert len(maximal_circular_planar(4)) == 6
    assert sorted(maximal_circular_planar(4)) == [
        (1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]
    assert len(maximal_circular_planar(6)) == 12


def test_maximal_circular_planar_is_planar():
    for n_b in range(3, 9):
        edges = maximal_circular_planar(n_b)
        assert is_planar(n_b, edges)
        if n_b <= 7:
            assert is_planar_oracle(n_b, edges)


def test_maximal_circular_planar_has_outer_cycle():
    edges = set(maximal_circular_planar(6))
    for k in range(1, 6):
        assert (k, k + 1) in edges
    assert (1, 6) in edges


def test_too_few_nodes():
    with pytest.raises(TooFewNodes):
        maximal_circular_planar(2)


def test_component_a_enumeration_rmax4():
    gadget = build_rsn(1, 2, 4)
    values = {r for _, r in gadget.enumerate_component_a()}
    assert values == COMPONENT_A_VALUES_RMAX4 | {INFINITE_RESISTANCE}
    # decimal truncations 0.666 and 1.66 stay within print tolerance
    assert abs(float(Fraction(2, 3)) - 0.666) < 5e-3
    assert abs(float(Fraction(5, 3)) - 1.66) < 7e-3
    # all-on minimum and the finite maximum
    all_on = gadget.component_a_resistance((1, 1, 1))
    assert all_on == Fraction(5, 8)
    finite = [r for _, r in gadget.enumerate_component_a() if r is not INFINITE_RESISTANCE]
    assert max(finite) == Fraction(3)


def test_component_a_rmax2():
    gadget = build_rsn(1, 2, 2)
    values = {r for _, r in gadget.enumerate_component_a()}
    assert values == {Fraction(1), INFINITE_RESISTANCE}


def test_full_gadget_range_exact():
    gadget = build_rsn(1, 2, 4)
    finite = [r for _, _, r in gadget.enumerate_gadget() if r is not INFINITE_RESISTANCE]
    assert min(finite) == Fraction(29, 40)  # 0.725 exactly
    assert max(finite) == Fraction(4)
    assert all(Fraction(29, 40) <= r <= Fraction(4) for r in finite)


def test_gadget_resistance_examples():
    gadget = build_rsn(1, 2, 4)
    assert gadget.gadget_resistance((1, 1, 1), [1]) == Fraction(13, 8)   # 1.625
    assert gadget.gadget_resistance((1, 1, 1), [4]) == Fraction(7, 8)    # 0.875
    assert gadget.gadget_resistance((1, 1, 1), [10]) == Fraction(29, 40)  # 0.725
    assert gadget.gadget_resistance((0, 0, 0), [1]) is INFINITE_RESISTANCE
    assert gadget.gadget_resistance((1, 1, 1), []) is INFINITE_RESISTANCE


def test_encode_resistance_integers():
    gadget = build_rsn(1, 2, 4)
    for target in (1, 2, 3, 4):
        state, q = gadget.encode_resistance(target)
        assert gadget.gadget_resistance(state, [q]) == Fraction(target)


def test_invalid_rmax():
    with pytest.raises(InvalidRmax):
        build_rsn(1, 2, 1.5)
    with pytest.raises(InvalidRmax):
        build_mprsn(4, 1.0)


def test_build_mprsn_counts():
    m = build_mprsn(4, 4)
    assert len(m.gadgets) == 6
    assert m.t == 6 * (3 + 10)
    assert m.node_count == 4 + 6 * 13
    m3 = build_mprsn(3, 2)
    assert len(m3.gadgets) == 3
    assert m3.t == 3 * 11


def test_evaluate_switches_all_off_disconnects_boundary():
    m = build_mprsn(4, 4)
    dists = boundary_resistance_vector(m, np.zeros(m.t))
    assert all(is_infinite(d) for d in dists)


def test_evaluate_switches_matches_gadget_equivalent():
    m = build_mprsn(4, 4)
    rho = np.zeros(m.t)
    g0 = m.gadgets[0]
    for s in g0.chain_slots:
        rho[s] = 1.0
    rho[g0.tap_slots[0]] = 1.0
    dists = boundary_resistance_vector(m, rho)
    by_pair = dict(zip(boundary_pairs(4), dists))
    assert by_pair[(1, 2)] == pytest.approx(1.625, abs=1e-9)
    assert is_infinite(by_pair[(3, 4)])


def test_evaluate_switches_boolean_equals_series_parallel():
    """Expanded network at boolean switches == the collapsed gadget value."""
    m = build_mprsn(4, 4)
    rho = np.zeros(m.t)
    g0 = m.gadgets[0]
    rho[g0.chain_slots[1]] = 1.0          # only switch to p_2: resistance 2
    rho[g0.tap_slots[3]] = 1.0            # tap 4: +1/4
    net = evaluate_switches(m, rho)
    edges = [(u, v, 1.0 / g) for u, v, g in net.edges]
    # reduce the whole expanded graph between boundary nodes 1 and 2
    value = series_parallel_resistance(edges, 1, 2)
    assert value == pytest.approx(2.25, abs=1e-12)
    assert pair_distances(net, [(1, 2)])[0] == pytest.approx(2.25, abs=1e-9)


def test_fractional_rho_rayleigh():
    m = build_mprsn(4, 4)
    half = np.full(m.t, 0.5)
    ones = np.ones(m.t)
    d_half = boundary_resistance_vector(m, half)
    d_one = boundary_resistance_vector(m, ones)
    for a, b in zip(d_half, d_one):
        assert not is_infinite(a)
        assert a >= b - 1e-10


def test_base_graph_dot():
    from rdnet.mprsn import base_graph_dot
    text = base_graph_dot(build_mprsn(4, 4))
    assert text.startswith("graph") and "1 -- 2" in text and "3 -- 4" in text


def test_rho_validation():
    m = build_mprsn(3, 2)
    with pytest.raises(DimensionMismatch):
        evaluate_switches(m, np.zeros(m.t - 1))
    with pytest.raises(DimensionMismatch):
        evaluate_switches(m, np.full(m.t, 1.5))
