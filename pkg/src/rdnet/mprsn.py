"""Maximal circular planar graph, resistor-switch gadgets, and the MPRSN.

Each base edge (i, j) carries one gadget:

* component A: chain nodes p_1..p_{R-1} (R = floor(r_max)) joined by fixed
  1-ohm resistors, plus a switched 1-ohm edge from i to every p_s;
* component B: tap nodes m_1..m_10 where tap q must present exactly 1/q ohm
  between the chain head and j when its connector switch is closed.  The tap
  path is realised as two series edges of conductance 2q: a switched edge
  (p_{R-1}, m_q) and a fixed edge (m_q, j).  Closed switch: 1/(2q) + 1/(2q)
  = 1/q ohm exactly; open switch: the tap node stays a harmless pendant of j.

Switch variables are flattened gadget by gadget (base edges in lexicographic
order), chain switches s = 1..R-1 first, then tap connectors q = 1..10.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

import numpy as np

from .netcore import (
    INFINITE_RESISTANCE,
    DimensionMismatch,
    Network,
    RdnetError,
    boundary_pairs,
    pair_distances,
)

TAP_COUNT = 10


class TooFewNodes(RdnetError):
    """A maximal circular planar graph needs at least three boundary nodes."""


class InvalidRmax(RdnetError):
    """Gadget construction needs r_max >= 2."""


def maximal_circular_planar(n_b: int) -> list:
    """Edge list of the maximal circular planar graph on n_b boundary nodes.

    Outer cycle 1-2-..-n_b-1, a fan from node 1 triangulating the inside of
    the cycle and a fan from node 2 triangulating the outside, for 3*n_b - 6
    edges total (the outerplanar cycle-plus-one-fan tops out at 2*n_b - 3).
    """
    if n_b < 3:
        raise TooFewNodes(f"need n_b >= 3, got {n_b}")
    edges = set()
    for k in range(1, n_b):
        edges.add((k, k + 1))
    edges.add((1, n_b))
    for k in range(3, n_b):
        edges.add((1, k))
    for k in range(4, n_b + 1):
        edges.add((2, k))
    out = sorted(edges)
    assert len(out) == 3 * n_b - 6
    return out


def _fraction_resistance(node_ids, edges, s, t):
    """Exact two-terminal resistance of a small network with Fraction weights.

    Returns INFINITE_RESISTANCE when s and t are not connected.
    """
    parent = {n: n for n in node_ids}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, v, _ in edges:
        parent[find(u)] = find(v)
    if find(s) != find(t):
        return INFINITE_RESISTANCE

    live = sorted(n for n in node_ids if find(n) == find(s))
    index = {n: k for k, n in enumerate(live)}
    n = len(live)
    L = [[Fraction(0) for _ in range(n)] for _ in range(n)]
    for u, v, g in edges:
        if u not in index or v not in index:
            continue
        a, b = index[u], index[v]
        L[a][b] -= g
        L[b][a] -= g
        L[a][a] += g
        L[b][b] += g
    # Ground t and solve the reduced system L' phi = e_s exactly.
    gnd = index[t]
    keep = [k for k in range(n) if k != gnd]
    A = [[L[r][c] for c in keep] for r in keep]
    rhs = [Fraction(1) if live[r] == s else Fraction(0) for r in keep]
    size = len(keep)
    for col in range(size):
        pivot = next(r for r in range(col, size) if A[r][col] != 0)
        A[col], A[pivot] = A[pivot], A[col]
        rhs[col], rhs[pivot] = rhs[pivot], rhs[col]
        inv = Fraction(1) / A[col][col]
        A[col] = [a * inv for a in A[col]]
        rhs[col] *= inv
        for r in range(size):
            if r != col and A[r][col] != 0:
                factor = A[r][col]
                A[r] = [a - factor * b for a, b in zip(A[r], A[col])]
                rhs[r] -= factor * rhs[col]
    s_row = keep.index(index[s])
    return rhs[s_row]


@dataclass(frozen=True)
class Rsn:
    """One resistor-switch gadget across boundary nodes i and j."""

    i: int
    j: int
    r_floor: int
    chain_nodes: tuple
    tap_nodes: tuple
    chain_slots: tuple
    tap_slots: tuple

    @property
    def head(self) -> int:
        """Chain head p_{R-1}, the node component B hangs off."""
        return self.chain_nodes[-1]

    def component_a_resistance(self, chain_state):
        """Exact resistance from i to the chain head for a boolean state."""
        if len(chain_state) != len(self.chain_nodes):
            raise DimensionMismatch("chain state length mismatch")
        nodes = [self.i, *self.chain_nodes]
        edges = []
        for a, b in zip(self.chain_nodes, self.chain_nodes[1:]):
            edges.append((a, b, Fraction(1)))
        for on, p in zip(chain_state, self.chain_nodes):
            if on:
                edges.append((self.i, p, Fraction(1)))
        return _fraction_resistance(nodes, edges, self.i, self.head)

    def gadget_resistance(self, chain_state, taps_on):
        """Exact i-to-j resistance for boolean chain switches and on-taps.

        ``taps_on`` lists the tap values q whose connector switch is closed;
        several closed taps combine in parallel.
        """
        if not taps_on:
            return INFINITE_RESISTANCE
        r_a = self.component_a_resistance(chain_state)
        if r_a is INFINITE_RESISTANCE:
            return INFINITE_RESISTANCE
        return r_a + Fraction(1, sum(taps_on))

    def enumerate_component_a(self) -> list:
        """(state, resistance) over all 2^(R-1) chain switch combinations."""
        out = []
        for state in product((0, 1), repeat=len(self.chain_nodes)):
            out.append((state, self.component_a_resistance(state)))
        return out

    def enumerate_gadget(self) -> list:
        """(state, q, resistance) over chain states and single closed taps."""
        out = []
        for state, r_a in self.enumerate_component_a():
            for q in range(1, TAP_COUNT + 1):
                if r_a is INFINITE_RESISTANCE:
                    out.append((state, q, INFINITE_RESISTANCE))
                else:
                    out.append((state, q, r_a + Fraction(1, q)))
        return out

    def encode_resistance(self, target) -> tuple:
        """Switch assignment realising an edge resistance as closely as possible.

        Returns (chain_state, q).  Exact matches win; ties break towards fewer
        closed switches, then lexicographic state, then smaller tap.
        """
        target = Fraction(target)
        best = None
        for state, q, r in self.enumerate_gadget():
            if r is INFINITE_RESISTANCE:
                continue
            key = (abs(r - target), sum(state), state, q)
            if best is None or key < best[0]:
                best = (key, state, q)
        if best is None:
            raise RdnetError("gadget cannot realise any finite resistance")
        return best[1], best[2]


def build_rsn(i: int, j: int, r_max: float, base_id: int | None = None,
              slot_offset: int = 0) -> Rsn:
    """Construct the gadget for edge (i, j); internal node ids start at base_id."""
    if r_max < 2:
        raise InvalidRmax(f"need r_max >= 2, got {r_max}")
    r_floor = math.floor(r_max)
    if base_id is None:
        base_id = max(i, j) + 1
    n_chain = r_floor - 1
    chain_nodes = tuple(range(base_id, base_id + n_chain))
    tap_nodes = tuple(range(base_id + n_chain, base_id + n_chain + TAP_COUNT))
    chain_slots = tuple(range(slot_offset, slot_offset + n_chain))
    tap_slots = tuple(range(slot_offset + n_chain, slot_offset + n_chain + TAP_COUNT))
    return Rsn(i, j, r_floor, chain_nodes, tap_nodes, chain_slots, tap_slots)


@dataclass(frozen=True)
class Mprsn:
    """Maximal planar resistor-switch network over n_b boundary nodes."""

    n_b: int
    r_max: float
    base_edges: tuple
    gadgets: tuple
    t: int
    node_count: int

    def slots_per_gadget(self) -> int:
        return (math.floor(self.r_max) - 1) + TAP_COUNT

    def expanded_edges(self, rho) -> list:
        """(u, v, conductance) triples of the expanded network at switch values rho.

        Zero-conductance (open switch) edges are omitted.
        """
        rho = np.asarray(rho, dtype=float)
        if rho.shape != (self.t,):
            raise DimensionMismatch(f"rho must have length {self.t}")
        if np.any(rho < -1e-12) or np.any(rho > 1 + 1e-12):
            raise DimensionMismatch("rho entries must lie in [0, 1]")
        edges = []
        for g in self.gadgets:
            for a, b in zip(g.chain_nodes, g.chain_nodes[1:]):
                edges.append((a, b, 1.0))
            for slot, p in zip(g.chain_slots, g.chain_nodes):
                val = float(rho[slot])
                if val > 0.0:
                    edges.append((g.i, p, val))
            for q, (slot, m_node) in enumerate(zip(g.tap_slots, g.tap_nodes), start=1):
                edges.append((m_node, g.j, 2.0 * q))
                val = float(rho[slot])
                if val > 0.0:
                    edges.append((g.head, m_node, 2.0 * q * val))
        return edges

    def switch_structure(self):
        """Static split of the expanded network into fixed and switched edges.

        Returns (fixed_pairs, fixed_g, switch_pairs, switch_scale, switch_slot)
        where a switched edge carries conductance scale * rho[slot].
        """
        fixed_pairs, fixed_g = [], []
        sw_pairs, sw_scale, sw_slot = [], [], []
        for g in self.gadgets:
            for a, b in zip(g.chain_nodes, g.chain_nodes[1:]):
                fixed_pairs.append((a, b))
                fixed_g.append(1.0)
            for q, m_node in enumerate(g.tap_nodes, start=1):
                fixed_pairs.append((min(m_node, g.j), max(m_node, g.j)))
                fixed_g.append(2.0 * q)
            for slot, p in zip(g.chain_slots, g.chain_nodes):
                sw_pairs.append((min(g.i, p), max(g.i, p)))
                sw_scale.append(1.0)
                sw_slot.append(slot)
            for q, (slot, m_node) in enumerate(zip(g.tap_slots, g.tap_nodes), start=1):
                sw_pairs.append((min(g.head, m_node), max(g.head, m_node)))
                sw_scale.append(2.0 * q)
                sw_slot.append(slot)
        return fixed_pairs, fixed_g, sw_pairs, sw_scale, sw_slot


def build_mprsn(n_b: int, r_max: float) -> Mprsn:
    if r_max < 2:
        raise InvalidRmax(f"need r_max >= 2, got {r_max}")
    base = maximal_circular_planar(n_b)
    r_floor = math.floor(r_max)
    per_gadget_nodes = (r_floor - 1) + TAP_COUNT
    per_gadget_slots = (r_floor - 1) + TAP_COUNT
    gadgets = []
    for idx, (i, j) in enumerate(base):
        gadgets.append(
            build_rsn(
                i,
                j,
                r_max,
                base_id=n_b + 1 + idx * per_gadget_nodes,
                slot_offset=idx * per_gadget_slots,
            )
        )
    t = len(base) * per_gadget_slots
    node_count = n_b + len(base) * per_gadget_nodes
    return Mprsn(n_b, float(r_max), tuple(base), tuple(gadgets), t, node_count)


def evaluate_switches(m: Mprsn, rho) -> Network:
    """Expanded network at the given switch values (relaxed or boolean)."""
    edges = m.expanded_edges(rho)
    return Network(m.n_b, m.node_count - m.n_b, edges)


def boundary_resistance_vector(m: Mprsn, rho) -> list:
    """Resistance distances over boundary pairs (lexicographic order).

    Disconnected pairs yield the INFINITE_RESISTANCE sentinel.
    """
    net = evaluate_switches(m, rho)
    return pair_distances(net, boundary_pairs(m.n_b))


def base_graph_dot(m: Mprsn) -> str:
    lines = ["graph mprsn_base {"]
    for node in range(1, m.n_b + 1):
        lines.append(f"  {node} [shape=circle];")
    for u, v in m.base_edges:
        lines.append(f"  {u} -- {v};")
    lines.append("}")
    return "\n".join(lines)
