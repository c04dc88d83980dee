"""End-to-end reconstruction pipeline and its configuration/artifacts."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import estimator, interiors, planarity, rewire, stage1
from .dccp import CcpOptions
from .mprsn import build_mprsn
from .netcore import (
    MeasurementSet,
    Network,
    RdnetError,
    boundary_pairs,
    is_connected,
    kirchhoff_index,
    network_to_json,
    resistance_matrix,
)

log = logging.getLogger("rdnet")

ALL_STAGES = ("estimate", "stage1", "interiors", "planarity", "rewire")


@dataclass
class PipelineConfig:
    """Pipeline knobs; everything deterministic flows from here."""

    seed: int = 0
    feas_tol: float = 1e-6
    guess_eps: float | None = None
    guess_max_iter: int | None = None
    ccp_max_outer: int = 16
    ccp_max_inner: int = 1500
    pi1_max_inner: int = 300
    candidate_cap: int = 64
    last_stage: str = "rewire"

    def ccp_options(self) -> CcpOptions:
        return CcpOptions(
            max_outer=self.ccp_max_outer,
            max_inner=self.ccp_max_inner,
            inner_tol=1e-9,
            feas_tol=self.feas_tol,
            seed=self.seed,
        )

    def pi1_options(self) -> CcpOptions:
        """Smaller inner budget for the switch problem; its expanded network
        makes each oracle call two orders of magnitude more expensive."""
        return CcpOptions(
            max_outer=min(self.ccp_max_outer, 10),
            max_inner=self.pi1_max_inner,
            feas_tol=self.feas_tol,
            seed=self.seed,
        )

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "feas_tol": self.feas_tol,
            "guess_eps": self.guess_eps,
            "guess_max_iter": self.guess_max_iter,
            "ccp_max_outer": self.ccp_max_outer,
            "ccp_max_inner": self.ccp_max_inner,
            "pi1_max_inner": self.pi1_max_inner,
            "candidate_cap": self.candidate_cap,
            "last_stage": self.last_stage,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "PipelineConfig":
        return cls(**{k: obj[k] for k in cls().to_json() if k in obj})


class StageFailure(RdnetError):
    def __init__(self, stage, cause):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineResult:
    network: Network | None
    artifacts: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = dict(self.artifacts)
        out["network"] = network_to_json(self.network) if self.network else None
        return out


def reconstruct(ms: MeasurementSet, config: PipelineConfig | None = None) -> PipelineResult:
    """Run the four-stage reconstruction on a measurement set."""
    config = config or PipelineConfig()
    opts = config.ccp_options()
    started = time.time()
    artifacts = {"config": config.to_json(), "warnings": []}

    # Stage 0: distance estimation (problem I).
    log.info("estimating unmeasured boundary distances")
    est = estimator.estimate(ms)
    estimated = est.estimated_pairs(ms)
    artifacts["estimate"] = {
        "R_hat": [[float(x) for x in row] for row in est.R_hat],
        "estimated_pairs": {f"{i},{j}": v for (i, j), v in estimated.items()},
        "residual": est.residual,
        "min_eig": est.min_eig,
        "worst_violation": est.worst_violation,
    }
    if config.last_stage == "estimate":
        return PipelineResult(None, artifacts)

    # Stage 1: switch network, initial guess, Pi_1, round-down, Gamma_aux.
    log.info("building MPRSN and running stage 1")
    mp = build_mprsn(ms.n_b, ms.r_max)
    guess = stage1.build_initial_guess(mp, ms, estimated,
                                       eps=config.guess_eps,
                                       max_iter=config.guess_max_iter)
    problem = stage1.Pi1Problem(mp, ms, estimated, feas_tol=config.feas_tol)
    sol = stage1.solve_pi1(mp, ms, estimated, guess.rho0, config.pi1_options(),
                           problem=problem)
    x = stage1.round_pi1(sol, problem)
    aux = stage1.extract_aux(mp, x)
    aux_source = "round_down"
    if len(aux.edges) == 0 or not is_connected(aux):
        artifacts["warnings"].append(
            "rounded switch network was disconnected; using the integer guess network"
        )
        aux = guess.state.network()
        aux_source = "guess_fallback"
    artifacts["stage1"] = {
        "guess_resistances": {f"{u},{v}": r for (u, v), r in sorted(guess.state.resistances.items())},
        "guess_iterations": guess.iterations,
        "guess_reached_eps": guess.reached_eps,
        "rho0": [float(v) for v in guess.rho0],
        "rho": [float(v) for v in sol.rho],
        "x": [float(v) for v in x],
        "objective": sol.objective,
        "weights": {f"{i},{j}": w for (i, j), w in sorted(sol.weights.items())},
        "report": sol.report,
        "aux_source": aux_source,
        "gamma_aux": network_to_json(aux),
    }
    if config.last_stage == "stage1":
        return PipelineResult(aux, artifacts)

    # Stage 2: relaxed conductances and interior placement.
    log.info("running stage 2 (interior placement)")
    pi2 = interiors.solve_pi2(aux, ms, estimated, opts)
    aux2 = pi2.as_network(ms.n_b)
    if not is_connected(aux2) or len(aux2.edges) == 0:
        artifacts["warnings"].append(
            "relaxed solution dropped to a disconnected network; keeping Gamma_aux"
        )
        aux2 = aux
    placement = interiors.place(aux2.pairs(), aux2.conductances(),
                                ms.n_i, ms.r_max, ms.n_b)
    hat = interiors.build_hat(aux2, placement, ms.gamma_max)
    artifacts["interiors"] = {
        "c_bar": {f"{u},{v}": float(c) for (u, v), c in zip(pi2.pairs, pi2.conductances)},
        "objective": pi2.objective,
        "report": pi2.report,
        "zero_edges": [list(p) for p in pi2.zero_edges()],
        "placement": {
            "on_edge": [[list(pair), node] for pair, node in placement.on_edge],
            "dangling": list(placement.dangling),
        },
        "hat_edges": [list(p) for p in hat.edges],
        "hat_protected": [list(p) for p in hat.protected],
    }
    if config.last_stage == "interiors":
        return PipelineResult(aux2, artifacts)

    # Stage 3: planar candidate extraction.
    log.info("extracting planar candidates")
    cand_set = planarity.embed_or_split(hat.m, hat.edges, hat.protected,
                                        cap=config.candidate_cap)
    artifacts["planarity"] = {
        "candidates": [[list(p) for p in graph] for graph in cand_set.graphs],
        "dropped": [[list(p) for p in d] for d in cand_set.dropped],
        "truncated": cand_set.truncated,
    }
    if config.last_stage == "planarity":
        return PipelineResult(aux2, artifacts)

    # Stage 4: per-candidate conductance assignment and selection.
    log.info("optimising %d candidate(s)", len(cand_set.graphs))
    results = []
    for graph in cand_set.graphs:
        c0 = [hat.initial_conductances[pair] for pair in graph]
        res = rewire.solve_pi3(graph, ms.n_b, hat.n_i, ms, estimated, c0, opts)
        res = rewire.round_conductances(res, ms, estimated, opts)
        results.append(res)
    try:
        best = rewire.select_best(results)
    except rewire.AllInfeasible:
        artifacts["warnings"].append(
            "no candidate reached constraint feasibility; selecting the "
            "least-violating result"
        )
        best = min(results,
                   key=lambda r: (r.report.get("max_violation", np.inf),
                                  r.objective))
    star = best.network()
    artifacts["rewire"] = {
        "objectives": [
            {"edges": [list(p) for p in r.pairs], "objective": r.objective,
             "feasible": r.feasible, "unplaced": list(r.unplaced)}
            for r in results
        ],
        "selected": next(i for i, r in enumerate(results) if r is best),
    }

    # Final report against the measurements.
    R = resistance_matrix(star)
    measured_errors = {}
    for (i, j), target in sorted(ms.distances.items()):
        got = float(R[i - 1, j - 1])
        measured_errors[f"{i},{j}"] = {
            "target": target,
            "reconstructed": got,
            "rel_error": abs(got - target) / abs(target),
        }
    k_star = kirchhoff_index(star)
    artifacts["report"] = {
        "measured_pairs": measured_errors,
        "kirchhoff": {
            "target": ms.kirchhoff_index,
            "reconstructed": k_star,
            "rel_error": abs(k_star - ms.kirchhoff_index) / ms.kirchhoff_index,
        },
        "planar": planarity.is_planar(star.m, star.pairs()),
        "connected": is_connected(star),
        "runtime_seconds": time.time() - started,
    }
    return PipelineResult(star, artifacts)


def reconstructed_boundary_distances(result: PipelineResult) -> dict:
    """Boundary-pair distances of the reconstructed network."""
    net = result.network
    R = resistance_matrix(net)
    return {(i, j): float(R[i - 1, j - 1]) for i, j in boundary_pairs(net.n_b)}
