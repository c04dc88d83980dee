"""Difference-of-convex solver and analytic derivatives of electrical quantities.

The convex-concave procedure here linearises every concave part at the current
point and minimises the penalised convex surrogate with a projected descent
inner loop.  Derivative formulas (with X = (L + J/n)^-1 and b_l the incidence
column of edge l):

    d r_ij / d c_l    = -(b_ij' X b_l)^2
    d K    / d c_l    = -n ||X b_l||^2
    d2 r_ij / d c_l^2 = 2 (b_ij' X b_l)^2 (b_l' X b_l)
    d2 K    / d c_l^2 = 2 n ||X b_l||^2 (b_l' X b_l)

All first derivatives are <= 0 (Rayleigh monotonicity) and all second
derivatives >= 0 (convexity in the conductances).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .netcore import (
    Network,
    RdnetError,
    SingularNetwork,
    x_matrix,
)


class OracleFailure(RdnetError):
    """An objective or constraint oracle failed at the starting point."""


@dataclass
class CcpOptions:
    """Knobs for the convex-concave procedure."""

    max_outer: int = 12
    max_inner: int = 250
    tau_init: float = 1.0
    tau_growth: float = 5.0
    tau_cap: float = 1e4
    inner_tol: float = 1e-8
    feas_tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if self.tau_growth <= 1.0:
            raise ValueError("tau growth factor must exceed 1")
        if min(self.max_outer, self.max_inner) <= 0:
            raise ValueError("iteration budgets must be positive")
        if min(self.tau_init, self.tau_cap, self.inner_tol, self.feas_tol) <= 0:
            raise ValueError("tolerances and penalties must be positive")


@dataclass
class DcProblem:
    """Oracle bundle for  min f(v)  s.t.  g(v) <= 0,  p(v) - q(v) >= 0,  box.

    objective(v) -> (value, gradient).
    convex_constraints(v) -> (values, jacobian) for the g_i, or None.
    dc_constraints(v) -> (p_vals, p_jac, q_vals, q_jac), or None.
    hess_diag(v) -> positive diagonal curvature estimate used only to scale
    the first inner step; correctness never depends on it.
    """

    dim: int
    objective: Callable
    lower: np.ndarray
    upper: np.ndarray
    convex_constraints: Optional[Callable] = None
    dc_constraints: Optional[Callable] = None
    hess_diag: Optional[Callable] = None


def _clip(v, lower, upper):
    return np.minimum(np.maximum(v, lower), upper)


def _penalized(problem: DcProblem, v, tau, q0, q_jac0, v_lin):
    """Value and subgradient of the linearised penalty surrogate at v."""
    try:
        f, grad = problem.objective(v)
    except SingularNetwork:
        return np.inf, None
    total = f
    g_total = grad.copy()
    if problem.dc_constraints is not None:
        try:
            p_vals, p_jac, _, _ = problem.dc_constraints(v)
        except SingularNetwork:
            return np.inf, None
        h_lin = p_vals - (q0 + q_jac0 @ (v - v_lin))
        viol = h_lin < 0
        if np.any(viol):
            total += tau * float(np.sum(-h_lin[viol]))
            g_total += tau * np.sum(q_jac0[viol] - p_jac[viol], axis=0)
    if problem.convex_constraints is not None:
        g_vals, g_jac = problem.convex_constraints(v)
        viol = g_vals > 0
        if np.any(viol):
            total += tau * float(np.sum(g_vals[viol]))
            g_total += tau * np.sum(g_jac[viol], axis=0)
    return total, g_total


def _true_violation(problem: DcProblem, v) -> float:
    worst = 0.0
    if problem.dc_constraints is not None:
        p_vals, _, q_vals, _ = problem.dc_constraints(v)
        h = p_vals - q_vals
        if h.size:
            worst = max(worst, float(np.max(-h)))
    if problem.convex_constraints is not None:
        g_vals, _ = problem.convex_constraints(v)
        if g_vals.size:
            worst = max(worst, float(np.max(g_vals)))
    return worst


def solve(problem: DcProblem, v0, opts: CcpOptions | None = None):
    """Run the convex-concave procedure from v0.

    Returns (v, report).  The report records the per-round penalised objective
    before/after each inner solve (non-increasing within every round), the
    final true objective, the worst constraint violation and a status flag:
    "converged", "max_iterations" (best feasible iterate returned) or
    "infeasible".
    """
    opts = opts or CcpOptions()
    v = _clip(np.asarray(v0, dtype=float), problem.lower, problem.upper)
    try:
        f0, _ = problem.objective(v)
    except SingularNetwork as exc:
        raise OracleFailure(f"objective undefined at the starting point: {exc}")
    if not np.isfinite(f0):
        raise OracleFailure("objective not finite at the starting point")

    tau = opts.tau_init
    rounds = []
    inner_total = 0
    best_feasible = None
    for _ in range(opts.max_outer):
        if problem.dc_constraints is not None:
            _, _, q0, q_jac0 = problem.dc_constraints(v)
        else:
            q0 = np.zeros(0)
            q_jac0 = np.zeros((0, problem.dim))
        v_lin = v.copy()

        # Diagonal preconditioner from the curvature estimate; correctness is
        # guarded by the monotone acceptance below, the scaling only speeds
        # up the descent on stiff problems.
        precond = np.ones(problem.dim)
        if problem.hess_diag is not None:
            diag = np.asarray(problem.hess_diag(v), dtype=float)
            floor = max(float(np.max(diag)) * 1e-6, 1e-12)
            precond = 1.0 / np.maximum(diag, floor)

        step = 1.0
        fv, gv = _penalized(problem, v, tau, q0, q_jac0, v_lin)
        start_val = fv
        moved = 0.0
        for _ in range(opts.max_inner):
            inner_total += 1
            if gv is None:
                break
            cand = _clip(v - step * precond * gv, problem.lower, problem.upper)
            fc, gc = _penalized(problem, cand, tau, q0, q_jac0, v_lin)
            if fc < fv:
                moved = float(np.linalg.norm(cand - v))
                v, fv, gv = cand, fc, gc
                step *= 1.4
                if moved < opts.inner_tol:
                    break
            else:
                step *= 0.5
                if step < 1e-15:
                    break
        rounds.append((start_val, fv))

        violation = _true_violation(problem, v)
        f_now, _ = problem.objective(v)
        if violation <= opts.feas_tol:
            if best_feasible is None or f_now < best_feasible[1]:
                best_feasible = (v.copy(), f_now)
            if moved < opts.inner_tol * 10:
                report = _report("converged", f_now, violation, rounds, inner_total)
                return v, report
        tau = min(tau * opts.tau_growth, opts.tau_cap)

    violation = _true_violation(problem, v)
    f_now, _ = problem.objective(v)
    if violation <= opts.feas_tol:
        status = "max_iterations"
        if best_feasible is not None and best_feasible[1] < f_now:
            v, f_now = best_feasible
            violation = _true_violation(problem, v)
    elif best_feasible is not None:
        v, f_now = best_feasible
        violation = _true_violation(problem, v)
        status = "max_iterations"
    else:
        status = "infeasible"
    return v, _report(status, f_now, violation, rounds, inner_total)


def _report(status, objective, violation, rounds, inner_total):
    return {
        "status": status,
        "objective": float(objective),
        "max_violation": float(violation),
        "rounds": [(float(a), float(b)) for a, b in rounds],
        "monotone": all(b <= a + 1e-9 for a, b in rounds),
        "inner_iterations": inner_total,
    }


# ---------------------------------------------------------------------------
# Analytic derivatives of resistance distance and Kirchhoff index
# ---------------------------------------------------------------------------

def _edge_x_column(net: Network, X, edge_idx):
    u, v, _ = net.edges[edge_idx]
    return X[:, u - 1] - X[:, v - 1]


def grad_rd(net: Network, pair, edge_idx: int) -> float:
    """d r^d_(i,j) / d c_l; always <= 0."""
    i, j = pair
    X = x_matrix(net)
    xb = _edge_x_column(net, X, edge_idx)
    inner = xb[i - 1] - xb[j - 1]
    return -(inner ** 2)


def grad_kirchhoff(net: Network, edge_idx: int) -> float:
    """d K / d c_l; always <= 0."""
    X = x_matrix(net)
    xb = _edge_x_column(net, X, edge_idx)
    return -net.m * float(xb @ xb)


def hess_diag_rd(net: Network, pair, edge_idx: int) -> float:
    """d^2 r^d_(i,j) / d c_l^2; always >= 0."""
    i, j = pair
    X = x_matrix(net)
    xb = _edge_x_column(net, X, edge_idx)
    inner = xb[i - 1] - xb[j - 1]
    u, v, _ = net.edges[edge_idx]
    bxb = xb[u - 1] - xb[v - 1]
    return 2.0 * (inner ** 2) * bxb


def hess_diag_kirchhoff(net: Network, edge_idx: int) -> float:
    """d^2 K / d c_l^2; always >= 0."""
    X = x_matrix(net)
    xb = _edge_x_column(net, X, edge_idx)
    u, v, _ = net.edges[edge_idx]
    bxb = xb[u - 1] - xb[v - 1]
    return 2.0 * net.m * float(xb @ xb) * bxb


def rd_values_and_jacobian(X: np.ndarray, node_pairs, edge_pairs):
    """Vectorised resistance distances and their conductance Jacobian.

    node_pairs: list of (i, j) 1-based node pairs; edge_pairs: list of (u, v).
    Returns (values[len(pairs)], jac[len(pairs), len(edges)]), where
    jac[p, l] = d r_p / d c_l = -(b_p' X b_l)^2.
    """
    us = np.array([u - 1 for u, _ in edge_pairs], dtype=int)
    vs = np.array([v - 1 for _, v in edge_pairs], dtype=int)
    U = X[:, us] - X[:, vs]
    values = np.empty(len(node_pairs))
    jac = np.empty((len(node_pairs), len(edge_pairs)))
    for p, (i, j) in enumerate(node_pairs):
        values[p] = X[i - 1, i - 1] + X[j - 1, j - 1] - 2.0 * X[i - 1, j - 1]
        inner = U[i - 1, :] - U[j - 1, :]
        jac[p, :] = -(inner ** 2)
    return values, jac


def kirchhoff_value_and_grad(X: np.ndarray, edge_pairs):
    """Kirchhoff index and its conductance gradient from a precomputed X."""
    m = X.shape[0]
    us = np.array([u - 1 for u, _ in edge_pairs], dtype=int)
    vs = np.array([v - 1 for _, v in edge_pairs], dtype=int)
    U = X[:, us] - X[:, vs]
    value = m * float(np.trace(X)) - m
    grad = -m * np.sum(U * U, axis=0)
    return value, grad


# ---------------------------------------------------------------------------
# Finite-difference validation
# ---------------------------------------------------------------------------

def _fd_gradient(fn, c, l, h):
    cp = c.copy()
    cp[l] += h
    cm = c.copy()
    cm[l] -= h
    return (fn(cp) - fn(cm)) / (2.0 * h)

def _fd_second(fn, c, l, h):
    cp = c.copy()
    cp[l] += h
    cm = c.copy()
    cm[l] -= h
    return (fn(cp) - 2.0 * fn(c) + fn(cm)) / (h * h)


def random_connected_network(rng: np.random.Generator, n: int,
                             extra_prob: float = 0.3,
                             g_low: float = 0.5, g_high: float = 2.0) -> Network:
    """Random connected network on n nodes: random tree plus extra edges."""
    edges = {}
    for k in range(2, n + 1):
        parent = int(rng.integers(1, k))
        edges[(parent, k)] = float(rng.uniform(g_low, g_high))
    for u in range(1, n + 1):
        for v in range(u + 1, n + 1):
            if (u, v) not in edges and rng.random() < extra_prob:
                edges[(u, v)] = float(rng.uniform(g_low, g_high))
    return Network(n, 0, [(u, v, g) for (u, v), g in edges.items()])


REL_ERR_FLOOR = 1e-3


def _rel_err(analytic, fd):
    """Relative error with an absolute floor.

    Derivatives of edges carrying no current are exactly zero; there the
    central difference returns pure round-off (~1e-8), so the comparison
    switches to an absolute scale below REL_ERR_FLOOR.
    """
    return abs(analytic - fd) / max(abs(fd), abs(analytic), REL_ERR_FLOOR)


def gradcheck(n: int = 6, samples: int = 50, seed: int = 0,
              grad_tol: float = 1e-5, hess_tol: float = 1e-3) -> dict:
    """Compare analytic derivatives against central finite differences.

    Samples random connected networks with random pair/edge picks and reports
    the worst relative error per oracle.
    """
    rng = np.random.default_rng(seed)
    worst = {"grad_rd": 0.0, "grad_kirchhoff": 0.0,
             "hess_diag_rd": 0.0, "hess_diag_kirchhoff": 0.0}
    signs_ok = True
    for _ in range(samples):
        net = random_connected_network(rng, int(rng.integers(3, n + 1)))
        pairs = net.pairs()
        edge_idx = int(rng.integers(len(pairs)))
        i = int(rng.integers(1, net.m + 1))
        j = int(rng.integers(1, net.m + 1))
        while j == i:
            j = int(rng.integers(1, net.m + 1))
        c = net.conductances()

        def rd_of(cv, _i=i, _j=j):
            from .netcore import resistance_from_x, x_matrix_dense
            return resistance_from_x(x_matrix_dense(net.m, pairs, cv), _i, _j)

        def k_of(cv):
            from .netcore import kirchhoff_from_x, x_matrix_dense
            return kirchhoff_from_x(x_matrix_dense(net.m, pairs, cv))

        checks = [
            ("grad_rd", grad_rd(net, (i, j), edge_idx),
             _fd_gradient(rd_of, c, edge_idx, 1e-6)),
            ("grad_kirchhoff", grad_kirchhoff(net, edge_idx),
             _fd_gradient(k_of, c, edge_idx, 1e-6)),
            ("hess_diag_rd", hess_diag_rd(net, (i, j), edge_idx),
             _fd_second(rd_of, c, edge_idx, 1e-4)),
            ("hess_diag_kirchhoff", hess_diag_kirchhoff(net, edge_idx),
             _fd_second(k_of, c, edge_idx, 1e-4)),
        ]
        for name, analytic, fd in checks:
            worst[name] = max(worst[name], _rel_err(analytic, fd))
        if checks[0][1] > 1e-12 or checks[1][1] > 1e-12:
            signs_ok = False

    return {
        "samples": samples,
        "max_rel_err": worst,
        "first_derivatives_nonpositive": signs_ok,
        "passed": (worst["grad_rd"] <= grad_tol
                   and worst["grad_kirchhoff"] <= grad_tol
                   and worst["hess_diag_rd"] <= hess_tol
                   and worst["hess_diag_kirchhoff"] <= hess_tol
                   and signs_ok),
    }
