"""Graph and electrical primitives for weighted resistor networks.

Nodes are labelled with positive integers: boundary nodes 1..n_b in clockwise
circular order, interior nodes n_b+1..n_b+n_i.  Matrices are indexed from 0,
so node k maps to row/column k-1.

Edge order everywhere in this package is lexicographic by (min endpoint,
max endpoint); every conductance or switch vector follows that order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

CONNECTIVITY_EIG_TOL = 1e-10


class RdnetError(Exception):
    """Base class for errors raised by this package."""


class SingularNetwork(RdnetError):
    """The network (or a required sub-network) is electrically disconnected."""


class IndexOutOfRange(RdnetError):
    """An edge or node index fell outside the valid range."""


class DimensionMismatch(RdnetError):
    """A vector length does not match the expected dimension."""


class _InfiniteResistance:
    """Sentinel for the resistance distance of a disconnected node pair.

    Comparisons treat it as larger than any finite value; arithmetic with it
    is deliberately an error (only the switch-network enumerator is allowed
    to carry it around).
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE_RESISTANCE"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("INFINITE_RESISTANCE")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __abs__(self):
        return self

    def _no_arithmetic(self, *args):
        raise TypeError("arithmetic on an infinite resistance distance")

    __add__ = __radd__ = __sub__ = __rsub__ = _no_arithmetic
    __mul__ = __rmul__ = __truediv__ = __rtruediv__ = _no_arithmetic


INFINITE_RESISTANCE = _InfiniteResistance()


def is_infinite(value) -> bool:
    return value is INFINITE_RESISTANCE


def _canonical_edges(edges) -> tuple:
    seen = {}
    for item in edges:
        u, v, g = item
        u, v = int(u), int(v)
        if u == v:
            raise ValueError(f"self-loop at node {u}")
        if u > v:
            u, v = v, u
        if (u, v) in seen:
            raise ValueError(f"duplicate edge ({u},{v})")
        g = float(g)
        if not g > 0.0:
            raise ValueError(f"conductance of edge ({u},{v}) must be > 0, got {g}")
        seen[(u, v)] = g
    return tuple((u, v, seen[(u, v)]) for (u, v) in sorted(seen))


@dataclass(frozen=True)
class Network:
    """A simple undirected resistor network with positive edge conductances."""

    n_b: int
    n_i: int
    edges: tuple = ()

    def __post_init__(self):
        if self.n_b < 1 or self.n_i < 0:
            raise ValueError("need n_b >= 1 and n_i >= 0")
        object.__setattr__(self, "edges", _canonical_edges(self.edges))
        m = self.n_b + self.n_i
        for u, v, _ in self.edges:
            if not (1 <= u <= m and 1 <= v <= m):
                raise IndexOutOfRange(f"edge ({u},{v}) outside node range 1..{m}")

    @property
    def m(self) -> int:
        return self.n_b + self.n_i

    def pairs(self) -> tuple:
        return tuple((u, v) for u, v, _ in self.edges)

    def conductances(self) -> np.ndarray:
        return np.array([g for _, _, g in self.edges], dtype=float)

    def has_edge(self, u: int, v: int) -> bool:
        u, v = min(u, v), max(u, v)
        return any((a, b) == (u, v) for a, b, _ in self.edges)

    def conductance(self, u: int, v: int) -> float:
        u, v = min(u, v), max(u, v)
        for a, b, g in self.edges:
            if (a, b) == (u, v):
                return g
        raise IndexOutOfRange(f"no edge ({u},{v})")

    def with_edge(self, u: int, v: int, g: float) -> "Network":
        u, v = min(u, v), max(u, v)
        kept = [e for e in self.edges if (e[0], e[1]) != (u, v)]
        kept.append((u, v, g))
        return Network(self.n_b, self.n_i, kept)

    def without_edge(self, u: int, v: int) -> "Network":
        u, v = min(u, v), max(u, v)
        kept = [e for e in self.edges if (e[0], e[1]) != (u, v)]
        if len(kept) == len(self.edges):
            raise IndexOutOfRange(f"no edge ({u},{v})")
        return Network(self.n_b, self.n_i, kept)


@dataclass(frozen=True)
class MeasurementSet:
    """Boundary measurements available for a reconstruction problem.

    ``available`` is the set A of boundary nodes that can be probed,
    ``distances`` maps measured pairs (i, j) with i < j to ohms, and
    ``kirchhoff_index`` is the known index of the full unknown network.
    """

    n_b: int
    n_i: int
    available: frozenset
    distances: Mapping
    kirchhoff_index: float
    gamma_min: float
    gamma_max: float

    def __post_init__(self):
        object.__setattr__(self, "available", frozenset(int(a) for a in self.available))
        if not self.available <= set(range(1, self.n_b + 1)):
            raise ValueError("available nodes must be boundary nodes 1..n_b")
        norm = {}
        for (i, j), value in dict(self.distances).items():
            i, j = int(i), int(j)
            if i == j:
                raise ValueError("diagonal distances are implicitly zero; do not store them")
            if i > j:
                i, j = j, i
            if {i, j} - self.available:
                raise ValueError(f"measured pair ({i},{j}) outside the available set")
            norm[(i, j)] = float(value)
        object.__setattr__(self, "distances", norm)
        if not (0.0 < self.gamma_min <= self.gamma_max):
            raise ValueError("need 0 < gamma_min <= gamma_max")
        if not self.kirchhoff_index > 0.0:
            raise ValueError("kirchhoff_index must be positive")

    @property
    def m(self) -> int:
        return self.n_b + self.n_i

    @property
    def unavailable_boundary(self) -> tuple:
        return tuple(sorted(set(range(1, self.n_b + 1)) - self.available))

    @property
    def r_max(self) -> float:
        return 1.0 / self.gamma_min


def boundary_pairs(n_b: int) -> list:
    """All boundary node pairs (i, j), i < j, in lexicographic order."""
    return [(i, j) for i in range(1, n_b + 1) for j in range(i + 1, n_b + 1)]


def laplacian_dense(m: int, pairs, conductances) -> np.ndarray:
    L = np.zeros((m, m))
    for (u, v), g in zip(pairs, conductances):
        a, b = u - 1, v - 1
        L[a, b] -= g
        L[b, a] -= g
        L[a, a] += g
        L[b, b] += g
    return L


def laplacian(net: Network) -> np.ndarray:
    """Weighted graph Laplacian; rows sum to zero."""
    return laplacian_dense(net.m, net.pairs(), net.conductances())


def connected_components(m: int, pairs) -> list:
    """Connected components (lists of 1-based node labels) under the edge set."""
    parent = list(range(m + 1))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for u, v in pairs:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[ru] = rv
    groups = {}
    for node in range(1, m + 1):
        groups.setdefault(find(node), []).append(node)
    return sorted(groups.values())


def is_connected(net: Network) -> bool:
    return len(connected_components(net.m, net.pairs())) == 1


def x_matrix_dense(m: int, pairs, conductances) -> np.ndarray:
    """X = (L + J/m)^-1 via a symmetric eigendecomposition.

    Raises SingularNetwork when the smallest eigenvalue of (L + J/m) is at or
    below the connectivity tolerance, i.e. when the graph is electrically
    disconnected.
    """
    L = laplacian_dense(m, pairs, conductances)
    A = L + np.full((m, m), 1.0 / m)
    w, V = np.linalg.eigh(A)
    if w[0] <= CONNECTIVITY_EIG_TOL:
        raise SingularNetwork(
            f"smallest eigenvalue of (L + J/m) is {w[0]:.3e}; network disconnected"
        )
    return (V / w) @ V.T


def x_matrix(net: Network) -> np.ndarray:
    return x_matrix_dense(net.m, net.pairs(), net.conductances())


def laplacian_pinv(L: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a connected-graph Laplacian.

    Uses the identity pinv(L) = (L + J/n)^-1 - J/n rather than an SVD so the
    result is numerically consistent with the derivative formulas used by the
    solvers.
    """
    n = L.shape[0]
    J = np.full((n, n), 1.0 / n)
    w, V = np.linalg.eigh(L + J)
    if w[0] <= CONNECTIVITY_EIG_TOL:
        raise SingularNetwork(
            f"smallest eigenvalue of (L + J/n) is {w[0]:.3e}; graph disconnected"
        )
    return (V / w) @ V.T - J


def resistance_from_x(X: np.ndarray, i: int, j: int) -> float:
    return X[i - 1, i - 1] + X[j - 1, j - 1] - 2.0 * X[i - 1, j - 1]


def distance_matrix_from_x(X: np.ndarray) -> np.ndarray:
    d = np.diag(X)
    return d[:, None] + d[None, :] - 2.0 * X


def resistance_distance(net: Network, i: int, j: int) -> float:
    """Effective resistance between nodes i and j."""
    m = net.m
    if not (1 <= i <= m and 1 <= j <= m):
        raise IndexOutOfRange(f"nodes ({i},{j}) outside 1..{m}")
    if i == j:
        raise IndexOutOfRange("resistance distance needs two distinct nodes")
    return resistance_from_x(x_matrix(net), i, j)


def resistance_matrix(net: Network) -> np.ndarray:
    """Full m x m resistance distance matrix (zero diagonal, symmetric)."""
    return distance_matrix_from_x(x_matrix(net))


def kirchhoff_index(net: Network) -> float:
    """Sum of resistance distances over all unordered node pairs.

    Computed with the closed form m*Tr((L + J/m)^-1) - m, which equals the
    half-vectorised sum of the resistance matrix.
    """
    m = net.m
    return m * float(np.trace(x_matrix(net))) - m


def kirchhoff_from_x(X: np.ndarray) -> float:
    m = X.shape[0]
    return m * float(np.trace(X)) - m


def incidence_column(net: Network, edge_index: int) -> np.ndarray:
    """Column b_l of the incidence matrix for the l-th edge (0-based index).

    +1 at the smaller endpoint and -1 at the larger one, matching the global
    lexicographic edge order.
    """
    if not (0 <= edge_index < len(net.edges)):
        raise IndexOutOfRange(f"edge index {edge_index} out of range")
    u, v, _ = net.edges[edge_index]
    b = np.zeros(net.m)
    b[u - 1] = 1.0
    b[v - 1] = -1.0
    return b


def edge_index(net: Network, u: int, v: int) -> int:
    u, v = min(u, v), max(u, v)
    for idx, (a, b, _) in enumerate(net.edges):
        if (a, b) == (u, v):
            return idx
    raise IndexOutOfRange(f"no edge ({u},{v})")


def pair_distances(net: Network, pairs) -> list:
    """Resistance distances for the given node pairs.

    Pairs in different connected components get the INFINITE_RESISTANCE
    sentinel instead of a number; finite entries are computed per component.
    """
    comps = connected_components(net.m, net.pairs())
    comp_of = {}
    for comp in comps:
        for node in comp:
            comp_of[node] = id(comp)
    x_cache = {}
    out = []
    for i, j in pairs:
        if comp_of[i] != comp_of[j]:
            out.append(INFINITE_RESISTANCE)
            continue
        key = comp_of[i]
        if key not in x_cache:
            comp = next(c for c in comps if id(c) == key)
            local = {node: idx + 1 for idx, node in enumerate(comp)}
            sub_pairs = []
            sub_g = []
            for u, v, g in net.edges:
                if u in local and v in local:
                    sub_pairs.append((local[u], local[v]))
                    sub_g.append(g)
            X = x_matrix_dense(len(comp), sub_pairs, sub_g)
            x_cache[key] = (local, X)
        local, X = x_cache[key]
        out.append(resistance_from_x(X, local[i], local[j]))
    return out


def network_to_json(net: Network) -> dict:
    return {
        "n_b": net.n_b,
        "n_i": net.n_i,
        "edges": [{"u": u, "v": v, "g": g} for u, v, g in net.edges],
    }


def network_from_json(obj: dict) -> Network:
    edges = [(e["u"], e["v"], e["g"]) for e in obj.get("edges", [])]
    return Network(int(obj["n_b"]), int(obj["n_i"]), edges)


def measurements_to_json(ms: MeasurementSet) -> dict:
    return {
        "n_b": ms.n_b,
        "n_i": ms.n_i,
        "available": sorted(ms.available),
        "distances": [[i, j, value] for (i, j), value in sorted(ms.distances.items())],
        "kirchhoff_index": ms.kirchhoff_index,
        "gamma_min": ms.gamma_min,
        "gamma_max": ms.gamma_max,
    }


def measurements_from_json(obj: dict) -> MeasurementSet:
    return MeasurementSet(
        n_b=int(obj["n_b"]),
        n_i=int(obj["n_i"]),
        available=frozenset(obj["available"]),
        distances={(int(i), int(j)): float(v) for i, j, v in obj["distances"]},
        kirchhoff_index=float(obj["kirchhoff_index"]),
        gamma_min=float(obj["gamma_min"]),
        gamma_max=float(obj["gamma_max"]),
    )


def to_dot(net: Network, name: str = "network") -> str:
    """GraphViz DOT text for a network; boundary nodes drawn as circles."""
    lines = [f"graph {name} {{"]
    for node in range(1, net.m + 1):
        shape = "circle" if node <= net.n_b else "square"
        lines.append(f'  {node} [shape={shape}];')
    for u, v, g in net.edges:
        lines.append(f'  {u} -- {v} [label="{g:.6g}"];')
    lines.append("}")
    return "\n".join(lines)
