"""Stage 4: edge-weight assignment per planar candidate and final selection.

Every planar candidate gets its conductances optimised under the box
[0, gamma_max]; conductances that land strictly between 0 and gamma_min are
rounded to one of the two ends by the sign of the discrete objective
difference, the problem is re-solved once over the surviving edges, and the
candidate with the smallest objective wins.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ._solverbits import ConductanceProblem
from .dccp import CcpOptions, solve
from .netcore import MeasurementSet, Network, RdnetError

CONDUCTANCE_FLOOR = 1e-8


class AllInfeasible(RdnetError):
    """No candidate produced a feasible optimised network."""


@dataclass
class CandidateResult:
    """Optimised conductances for one planar candidate topology."""

    n_b: int
    n_i: int
    pairs: tuple
    conductances: np.ndarray
    weights: dict
    objective: float
    report: dict
    feasible: bool
    unplaced: tuple = ()

    def network(self) -> Network:
        edges = [(u, v, float(c)) for (u, v), c in zip(self.pairs, self.conductances)
                 if c > 0.0]
        return Network(self.n_b, self.n_i, edges)


def _merge_targets(ms: MeasurementSet, estimated: dict) -> dict:
    targets = dict(estimated)
    targets.update(ms.distances)
    return targets


def solve_pi3(pairs, n_b: int, n_i: int, ms: MeasurementSet, estimated: dict,
              c0, opts: CcpOptions | None = None) -> CandidateResult:
    """Optimise the conductances of one candidate topology."""
    opts = opts or CcpOptions()
    problem = ConductanceProblem(
        m=n_b + n_i,
        pairs=pairs,
        ms=ms,
        targets=_merge_targets(ms, estimated),
        lower=CONDUCTANCE_FLOOR,
        upper=float(ms.gamma_max),
        k_target=ms.kirchhoff_index,
        feas_tol=opts.feas_tol,
    )
    c0 = np.clip(np.asarray(c0, dtype=float), CONDUCTANCE_FLOOR, ms.gamma_max)
    v0 = np.concatenate([c0, problem.layout.w0()])
    v, report = solve(problem.as_dc_problem(), v0, opts)
    weights = {pair: float(v[problem.n_edges + slot])
               for pair, slot in problem.layout.w_slot.items()}
    return CandidateResult(
        n_b=n_b,
        n_i=n_i,
        pairs=tuple(pairs),
        conductances=v[:problem.n_edges],
        weights=weights,
        objective=report["objective"],
        report=report,
        feasible=report["status"] != "infeasible",
    )


def round_conductances(result: CandidateResult, ms: MeasurementSet,
                       estimated: dict,
                       opts: CcpOptions | None = None) -> CandidateResult:
    """Snap gap conductances to {0, gamma_min} and re-solve once.

    Entries in the open interval (0, gamma_min) move to the end with the
    smaller objective (discrete derivative sign); a move to 0 that would
    disconnect the network scores +inf and therefore never commits.  Interior
    nodes that lose every incident edge are dropped and reported as unplaced.
    """
    opts = opts or CcpOptions()
    gamma_min = ms.gamma_min
    targets = _merge_targets(ms, estimated)
    problem = ConductanceProblem(
        m=result.n_b + result.n_i,
        pairs=result.pairs,
        ms=ms,
        targets=targets,
        lower=CONDUCTANCE_FLOOR,
        upper=float(ms.gamma_max),
        k_target=ms.kirchhoff_index,
        feas_tol=opts.feas_tol,
    )
    w_vars = np.array([result.weights[p] for p in problem.layout.w_pairs]) \
        if problem.layout.w_pairs else np.zeros(0)
    c = result.conductances.copy()
    in_gap = [k for k in range(c.size) if 0.0 < c[k] < gamma_min - 1e-12]
    if not in_gap:
        return result
    for k in in_gap:
        probe_min = c.copy()
        probe_min[k] = gamma_min
        probe_zero = c.copy()
        probe_zero[k] = 0.0
        f_min = problem.objective_c(probe_min, w_vars)
        f_zero = problem.objective_c(probe_zero, w_vars)
        c[k] = 0.0 if f_zero <= f_min else gamma_min

    rounded = _resolve_rounded(result, ms, targets, c, opts)
    if rounded.feasible or not result.feasible:
        return rounded
    # Re-solving after dropping edges went infeasible although the relaxed
    # solution was fine: keep every gap edge at gamma_min instead (never
    # disconnects) and re-solve once more.
    c_keep = result.conductances.copy()
    for k in in_gap:
        c_keep[k] = gamma_min
    return _resolve_rounded(result, ms, targets, c_keep, opts)


def _resolve_rounded(result: CandidateResult, ms: MeasurementSet, targets: dict,
                     c: np.ndarray, opts: CcpOptions) -> CandidateResult:
    """Drop zeroed edges, relabel interiors, and re-solve over the survivors."""
    gamma_min = ms.gamma_min
    kept = [k for k in range(c.size) if c[k] > 0.0]
    kept_pairs = [result.pairs[k] for k in kept]
    if not kept_pairs:
        return replace(result, feasible=False)
    touched = set()
    for u, v in kept_pairs:
        touched.add(u)
        touched.add(v)
    interior = range(result.n_b + 1, result.n_b + result.n_i + 1)
    unplaced = tuple(node for node in interior if node not in touched)
    relabel = {}
    next_id = result.n_b + 1
    for node in interior:
        if node in touched:
            relabel[node] = next_id
            next_id += 1
    new_n_i = result.n_i - len(unplaced)

    def map_node(node):
        return node if node <= result.n_b else relabel[node]

    new_pairs = sorted(
        (min(map_node(u), map_node(v)), max(map_node(u), map_node(v)))
        for u, v in kept_pairs
    )
    order = {pair: idx for idx, pair in enumerate(new_pairs)}
    new_c0 = np.empty(len(new_pairs))
    for k, (u, v) in zip(kept, kept_pairs):
        mapped = (min(map_node(u), map_node(v)), max(map_node(u), map_node(v)))
        new_c0[order[mapped]] = c[k]

    resolve = ConductanceProblem(
        m=result.n_b + new_n_i,
        pairs=new_pairs,
        ms=ms,
        targets=targets,
        lower=float(gamma_min),
        upper=float(ms.gamma_max),
        k_target=ms.kirchhoff_index,
        feas_tol=opts.feas_tol,
    )
    v0 = np.concatenate([new_c0, np.array([result.weights[p] for p in resolve.layout.w_pairs])
                         if resolve.layout.w_pairs else np.zeros(0)])
    v, report = solve(resolve.as_dc_problem(), v0, opts)
    weights = {pair: float(v[resolve.n_edges + slot])
               for pair, slot in resolve.layout.w_slot.items()}
    return CandidateResult(
        n_b=result.n_b,
        n_i=new_n_i,
        pairs=tuple(new_pairs),
        conductances=v[:resolve.n_edges],
        weights=weights,
        objective=report["objective"],
        report=report,
        feasible=report["status"] != "infeasible",
        unplaced=unplaced,
    )


def select_best(results) -> CandidateResult:
    """Minimum-objective feasible candidate; ties favour fewer edges."""
    feasible = [r for r in results
                if r.feasible and np.isfinite(r.objective)]
    if not feasible:
        raise AllInfeasible("no feasible candidate result")
    return min(feasible, key=lambda r: (r.objective, len(r.pairs), r.pairs))
