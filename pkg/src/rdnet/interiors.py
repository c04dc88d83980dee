"""Stage 2: relaxed re-optimisation of the auxiliary network and interior placement.

Solving the conductance relaxation with the Kirchhoff-index error term pushes
some edge resistances past r_max; those edges receive interior nodes (split
into two halves), and any interior nodes left over become dangling nodes.
The hat graph then connects every interior node to every other node so the
planarity stage can prune the connections that cannot coexist in a disc.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._solverbits import ConductanceProblem
from .dccp import CcpOptions, solve
from .netcore import MeasurementSet, Network

CONDUCTANCE_FLOOR = 1e-8
ZERO_EDGE_TOL = 1e-9
OVERSIZE_SLACK = 1e-9


@dataclass
class Pi2Result:
    """Solution of the relaxed conductance problem on the auxiliary topology."""

    pairs: tuple
    conductances: np.ndarray
    weights: dict
    objective: float
    report: dict

    def zero_edges(self) -> tuple:
        return tuple(p for p, c in zip(self.pairs, self.conductances)
                     if c < ZERO_EDGE_TOL)

    def as_network(self, n_b: int) -> Network:
        edges = [(u, v, float(c)) for (u, v), c in zip(self.pairs, self.conductances)
                 if c >= ZERO_EDGE_TOL]
        return Network(n_b, 0, edges)


def solve_pi2(aux: Network, ms: MeasurementSet, estimated: dict,
              opts: CcpOptions | None = None) -> Pi2Result:
    """Re-optimise the auxiliary edge conductances with the Kirchhoff term.

    The initial guess is the auxiliary network's own conductances; the box is
    one-sided (conductances may grow without bound, shrinking only to the
    numerical floor standing in for the relaxed c >= 0).
    """
    targets = dict(estimated)
    targets.update(ms.distances)
    opts = opts or CcpOptions()
    problem = ConductanceProblem(
        m=aux.n_b,
        pairs=aux.pairs(),
        ms=ms,
        targets=targets,
        lower=CONDUCTANCE_FLOOR,
        upper=np.inf,
        k_target=ms.kirchhoff_index,
        feas_tol=opts.feas_tol,
    )
    v0 = np.concatenate([aux.conductances(), problem.layout.w0()])
    v, report = solve(problem.as_dc_problem(), v0, opts)
    weights = {pair: float(v[problem.n_edges + slot])
               for pair, slot in problem.layout.w_slot.items()}
    return Pi2Result(tuple(aux.pairs()), v[:problem.n_edges], weights,
                     report["objective"], report)


@dataclass(frozen=True)
class Placement:
    """Interior-node assignment: edge splits plus dangling nodes."""

    on_edge: tuple
    dangling: tuple


def place(pairs, c_bar, n_i: int, r_max: float, n_b: int) -> Placement:
    """Assign interior nodes to the oversized-resistance edges.

    Edges with resistance above r_max are ranked in descending order (ties
    broken lexicographically); interior labels n_b+1.. follow that ranking,
    with leftover interior nodes dangling.
    """
    oversized = []
    for pair, c in zip(pairs, c_bar):
        if c < ZERO_EDGE_TOL:
            continue
        r = 1.0 / float(c)
        if r > r_max + OVERSIZE_SLACK:
            oversized.append((-r, pair))
    oversized.sort()
    n_split = min(len(oversized), n_i)
    on_edge = []
    next_id = n_b + 1
    for _, pair in oversized[:n_split]:
        on_edge.append((pair, next_id))
        next_id += 1
    dangling = tuple(range(next_id, n_b + n_i + 1))
    return Placement(tuple(on_edge), dangling)


@dataclass(frozen=True)
class HatGraph:
    """The fully-wired interior graph handed to the planarity stage."""

    n_b: int
    n_i: int
    edges: tuple
    protected: tuple
    initial_conductances: dict

    @property
    def m(self) -> int:
        return self.n_b + self.n_i


def build_hat(aux: Network, placement: Placement, gamma_max: float) -> HatGraph:
    """Split the placed edges and connect interior nodes to every other node.

    Unsplit auxiliary edges are protected (every planar candidate must keep
    them) and start at their relaxed conductance; split halves start at twice
    the parent conductance (half the resistance each); the speculative
    interior edges start at gamma_max.
    """
    split_of = {pair: node for pair, node in placement.on_edge}
    n_i = len(placement.on_edge) + len(placement.dangling)
    m = aux.n_b + n_i
    edges = {}
    protected = []
    for u, v, c in aux.edges:
        pair = (u, v)
        if pair in split_of:
            k = split_of[pair]
            edges[(min(u, k), max(u, k))] = 2.0 * c
            edges[(min(v, k), max(v, k))] = 2.0 * c
        else:
            edges[pair] = c
            protected.append(pair)
    for k in range(aux.n_b + 1, m + 1):
        for other in range(1, m + 1):
            if other == k:
                continue
            key = (min(k, other), max(k, other))
            if key not in edges:
                edges[key] = float(gamma_max)
    ordered = tuple(sorted(edges))
    return HatGraph(
        n_b=aux.n_b,
        n_i=n_i,
        edges=ordered,
        protected=tuple(sorted(protected)),
        initial_conductances={pair: edges[pair] for pair in ordered},
    )
