"""Acceptance criteria, one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines as they complete.
"""

import time
from fractions import Fraction
from itertools import combinations

import numpy as np

from rdnet.constraints import evaluate, generate_kalmanson, generate_triangle
from rdnet.dccp import gradcheck, random_connected_network
from rdnet.mprsn import build_mprsn, build_rsn, maximal_circular_planar
from rdnet.netcore import (
    INFINITE_RESISTANCE,
    MeasurementSet,
    Network,
    boundary_pairs,
    is_connected,
    kirchhoff_from_x,
    kirchhoff_index,
    resistance_distance,
    resistance_from_x,
    resistance_matrix,
    x_matrix_dense,
)
from rdnet.pipeline import PipelineConfig, reconstruct
from rdnet.planarity import dfs_palm, embed_or_split, find_paths, is_planar
from rdnet.stage1 import Pi1Problem, encode_network, round_down
from oracles import (
    all_connected_graphs,
    is_planar_oracle,
    random_cppr,
    random_sp_network,
)


def _line(num, name, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    print(f"[{status}] criterion {num}: {name}" + (f" ({detail})" if detail else ""))
    assert passed, f"criterion {num} failed: {name} {detail}"


def test_criterion_1_worked_example_end_to_end():
    ms = MeasurementSet(4, 2, frozenset({1, 3, 4}),
                        {(1, 3): 1.4984, (1, 4): 1.351, (3, 4): 1.0795},
                        19.8, 0.25, 2.0)
    t0 = time.time()
    result = reconstruct(ms, PipelineConfig())
    runtime = time.time() - t0
    star = result.network
    report = result.artifacts["report"]
    pair_ok = all(entry["rel_error"] <= 0.05
                  for entry in report["measured_pairs"].values())
    k_ok = report["kirchhoff"]["rel_error"] <= 0.05
    shape_ok = (star.n_b == 4 and star.n_i <= 2
                and is_connected(star) and is_planar(star.m, star.pairs()))
    detail = ("pairs " + " ".join(f"{k}:{v['rel_error']:.1%}"
                                  for k, v in report["measured_pairs"].items())
              + f" K:{report['kirchhoff']['rel_error']:.2%}"
              + f" runtime:{runtime:.0f}s")
    _line(1, "worked-example end-to-end reconstruction",
          pair_ok and k_ok and shape_ok and runtime <= 300.0, detail)


def test_criterion_2_gadget_enumeration_exact():
    gadget = build_rsn(1, 2, 4)
    component_a = {r for _, r in gadget.enumerate_component_a()}
    expected = {INFINITE_RESISTANCE, Fraction(1), Fraction(2), Fraction(2, 3),
                Fraction(3), Fraction(3, 4), Fraction(5, 3), Fraction(5, 8)}
    set_ok = component_a == expected
    finite = [r for _, _, r in gadget.enumerate_gadget()
              if r is not INFINITE_RESISTANCE]
    range_ok = (min(finite) == Fraction(29, 40) and max(finite) == Fraction(4)
                and all(Fraction(29, 40) <= r <= Fraction(4) for r in finite))
    _line(2, "gadget resistance enumeration (exact rationals)",
          set_ok and range_ok,
          f"A-set ok: {set_ok}, range [{min(finite)}, {max(finite)}]")


def test_criterion_3_derivative_suite():
    report = gradcheck(n=8, samples=50, seed=1)
    _line(3, "analytic derivatives vs central differences",
          bool(report["passed"]),
          " ".join(f"{k}={v:.2e}" for k, v in report["max_rel_err"].items()))


def test_criterion_4_convexity_property():
    rng = np.random.default_rng(4)
    worst_rd = worst_k = -np.inf
    for _ in range(200):
        n = int(rng.integers(3, 9))
        net = random_connected_network(rng, n)
        pairs = net.pairs()
        e = len(pairs)
        c1 = rng.uniform(0.2, 3.0, size=e)
        c2 = rng.uniform(0.2, 3.0, size=e)
        theta = float(rng.uniform(0.0, 1.0))
        i = int(rng.integers(1, n + 1))
        j = 1 + (i % n)
        X1 = x_matrix_dense(n, pairs, c1)
        X2 = x_matrix_dense(n, pairs, c2)
        Xm = x_matrix_dense(n, pairs, theta * c1 + (1 - theta) * c2)
        gap_rd = resistance_from_x(Xm, i, j) - (
            theta * resistance_from_x(X1, i, j)
            + (1 - theta) * resistance_from_x(X2, i, j))
        gap_k = kirchhoff_from_x(Xm) - (
            theta * kirchhoff_from_x(X1) + (1 - theta) * kirchhoff_from_x(X2))
        worst_rd = max(worst_rd, gap_rd)
        worst_k = max(worst_k, gap_k)
    _line(4, "Jensen convexity of r^d and K in the conductances",
          worst_rd <= 1e-9 and worst_k <= 1e-9,
          f"worst gaps rd={worst_rd:.2e} K={worst_k:.2e}")


def test_criterion_5_theorems_as_oracles():
    rng = np.random.default_rng(5)
    worst = np.inf
    for _ in range(50):
        n_b = int(rng.integers(4, 7))
        net = random_cppr(rng, n_b, n_i=int(rng.integers(0, 2)))
        R = resistance_matrix(net)
        hidden = int(rng.integers(1, n_b + 1))
        avail = set(range(1, n_b + 1)) - {hidden}
        ms = MeasurementSet(
            n_b, net.n_i, frozenset(avail),
            {(i, j): R[i - 1, j - 1] for i, j in boundary_pairs(n_b)
             if i in avail and j in avail},
            kirchhoff_index(net), 0.25, 2.0)
        cs = list(generate_triangle(ms)) + list(generate_kalmanson(ms))
        worst = min(worst, float(np.min(evaluate(R, cs))))
    _line(5, "triangle and Kalmanson residuals on exact CPPR matrices",
          worst >= -1e-9, f"worst residual {worst:.2e}")


def test_criterion_6_planarity():
    checked = 0
    agree = True
    for n in (3, 4, 5, 6):
        for pairs in all_connected_graphs(n):
            checked += 1
            if is_planar(n, pairs) != is_planar_oracle(n, pairs):
                agree = False
                break
    k5 = list(combinations(range(1, 6), 2))
    k33 = [(a, b) for a in (1, 2, 3) for b in (4, 5, 6)]
    classics_ok = (not is_planar(5, k5)) and (not is_planar(6, k33))

    hat = [(1, 2), (2, 3), (3, 4), (1, 4), (1, 5), (3, 5), (2, 5), (4, 5),
           (5, 6), (1, 6), (2, 6), (3, 6), (4, 6)]
    protected = [(1, 2), (2, 3), (3, 4), (1, 4)]
    decomp = find_paths(dfs_palm(6, hat))
    paths_ok = (decomp.cycle == (1, 2, 3, 4, 5, 6, 1)
                and sorted(p.vertices for p in decomp.paths)
                == sorted([(6, 2), (6, 3), (6, 4), (4, 1),
                           (5, 3), (5, 2), (5, 1)]))
    cand = embed_or_split(6, hat, protected)
    cand_ok = all(is_planar(6, g) and set(protected) <= set(g)
                  for g in cand.graphs) and len(cand.graphs) == 2
    k5_cand = embed_or_split(5, k5)
    cand_ok = cand_ok and all(is_planar_oracle(5, g) for g in k5_cand.graphs)
    _line(6, "planarity: exhaustive oracle agreement, classics, candidates, paths",
          agree and classics_ok and paths_ok and cand_ok,
          f"{checked} graphs checked")


def test_criterion_7_round_down():
    m = build_mprsn(4, 4)
    wanted = {p: 1 for p in maximal_circular_planar(4)}
    wanted[(1, 3)] = 2
    net = Network(4, 0, [(u, v, 1.0 / r) for (u, v), r in wanted.items()])
    R = resistance_matrix(net)
    targets = {p: R[p[0] - 1, p[1] - 1] for p in boundary_pairs(4)}
    measured = {p: targets[p] for p in [(1, 3), (1, 4), (3, 4)]}
    estimated = {p: targets[p] for p in boundary_pairs(4) if p not in measured}
    ms = MeasurementSet(4, 0, frozenset({1, 3, 4}), measured, 1.0, 0.25, 2.0)
    problem = Pi1Problem(m, ms, estimated)
    w0 = problem.layout.w0()
    objective = lambda r: problem.objective_rho(r, w0)

    rng = np.random.default_rng(99)
    all_boolean = True
    feas_preserved = True
    finite_ok = True
    prefeasible = 0
    for k in range(100):
        if k % 2 == 0:
            resist = {p: int(rng.integers(1, 5)) for p in m.base_edges
                      if rng.random() < 0.85}
            rho = np.clip(encode_network(m, resist)
                          + rng.uniform(-0.4, 0.4, m.t), 0, 1)
        else:
            rho = rng.uniform(0, 1, m.t)
        pre = problem.feasible(rho)
        x = round_down(rho, objective, problem.feasible)
        all_boolean &= set(np.unique(x)) <= {0.0, 1.0}
        if pre:
            prefeasible += 1
            feas_preserved &= problem.feasible(x)
            finite_ok &= bool(np.isfinite(objective(x)))
    _line(7, "round-down: boolean output, feasibility preserved, finite objective",
          all_boolean and feas_preserved and finite_ok,
          f"{prefeasible}/100 fuzz draws pre-feasible")


def test_criterion_8_synthetic_recovery():
    rng = np.random.default_rng(2024)
    pool = []
    per_instance = []
    for _ in range(20):
        n_b = int(rng.integers(4, 6))
        n_i = int(rng.integers(0, 3))
        net = random_cppr(rng, n_b, n_i=n_i)
        R = resistance_matrix(net)
        hidden = int(rng.integers(1, n_b + 1))
        avail = set(range(1, n_b + 1)) - {hidden}
        d = {(i, j): R[i - 1, j - 1] for i, j in boundary_pairs(n_b)
             if i in avail and j in avail}
        g_lo = min(g for _, _, g in net.edges)
        g_hi = max(g for _, _, g in net.edges)
        ms = MeasurementSet(n_b, n_i, frozenset(avail), d, kirchhoff_index(net),
                            min(0.25, g_lo), max(2.0, g_hi))
        result = reconstruct(ms, PipelineConfig())
        R_star = resistance_matrix(result.network)
        errs = [abs(R_star[i - 1, j - 1] - R[i - 1, j - 1]) / R[i - 1, j - 1]
                for i, j in boundary_pairs(n_b)]
        pool.extend(errs)
        per_instance.append(float(np.median(errs)))
    pooled = float(np.median(pool))
    _line(8, "synthetic recovery: boundary distances within 10% median",
          pooled <= 0.10,
          f"pooled median {pooled:.2%}, per-instance medians "
          f"{min(per_instance):.1%}..{max(per_instance):.1%}")


def test_criterion_9_oracle_equivalence():
    rng = np.random.default_rng(9)
    worst_sp = 0.0
    count = 0
    while count < 30:
        net, expected = random_sp_network(rng, steps=int(rng.integers(3, 8)))
        worst_sp = max(worst_sp, abs(resistance_distance(net, 1, 2) - expected))
        count += 1
    worst_k = 0.0
    for _ in range(100):
        net = random_connected_network(rng, int(rng.integers(3, 11)))
        R = resistance_matrix(net)
        worst_k = max(worst_k, abs(kirchhoff_index(net) - R.sum() / 2.0))
    _line(9, "series-parallel and trace-formula oracle equivalence",
          worst_sp <= 1e-9 and worst_k <= 1e-9,
          f"worst sp diff {worst_sp:.2e}, worst K diff {worst_k:.2e}")
