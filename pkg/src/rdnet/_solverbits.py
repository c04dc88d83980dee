"""Shared evaluation helpers for the three optimisation stages.

Both the switch problem (over the expanded MPRSN) and the conductance
problems (over ordinary networks) need boundary resistance distances, their
conductance Jacobians, and triangle/Kalmanson residuals as difference-of-
convex oracles.  The heavy lifting lives here.
"""

from __future__ import annotations

import numpy as np

from . import constraints as cons
from .dccp import kirchhoff_value_and_grad, rd_values_and_jacobian
from .netcore import (
    MeasurementSet,
    SingularNetwork,
    boundary_pairs,
    connected_components,
    x_matrix_dense,
)


def boundary_eval(node_count, all_pairs, c, bpairs):
    """Distances and Jacobian for boundary pairs, ignoring floating pieces.

    Only edges with positive conductance define connectivity; all boundary
    nodes must land in one component (otherwise SingularNetwork).  Edges with
    both endpoints inside that component keep exact gradients even at zero
    conductance; edges touching a floating piece get gradient zero.
    """
    n_b = max(max(p) for p in bpairs)
    live = [k for k in range(len(all_pairs)) if c[k] > 0.0]
    comps = connected_components(node_count, [all_pairs[k] for k in live])
    comp = None
    for group in comps:
        if 1 in group:
            comp = set(group)
            break
    if comp is None or any(b not in comp for b in range(1, n_b + 1)):
        raise SingularNetwork("boundary nodes split across components")
    local = {node: idx + 1 for idx, node in enumerate(sorted(comp))}
    sub_idx = [k for k in range(len(all_pairs))
               if all_pairs[k][0] in comp and all_pairs[k][1] in comp]
    sub_pairs = [(local[all_pairs[k][0]], local[all_pairs[k][1]]) for k in sub_idx]
    sub_c = np.array([c[k] for k in sub_idx])
    X = x_matrix_dense(len(comp), sub_pairs, sub_c)
    local_bpairs = [(local[i], local[j]) for i, j in bpairs]
    r_vals, jac_sub = rd_values_and_jacobian(X, local_bpairs, sub_pairs)
    jac = np.zeros((len(bpairs), len(all_pairs)))
    jac[:, sub_idx] = jac_sub
    return r_vals, jac


def full_eval(m, pairs, c, bpairs, want_kirchhoff=True):
    """Distances, Jacobian and Kirchhoff data on a fully connected network."""
    X = x_matrix_dense(m, pairs, c)
    r_vals, jac = rd_values_and_jacobian(X, bpairs, pairs)
    if not want_kirchhoff:
        return r_vals, jac, None, None
    k_val, k_grad = kirchhoff_value_and_grad(X, pairs)
    return r_vals, jac, k_val, k_grad


class ResidualLayout:
    """Index bookkeeping for the Pi-style objectives.

    Boundary pairs are ordered lexicographically; measured pairs carry fixed
    weight 1, the remaining pairs own one W decision variable each, boxed to
    [0.5, 0.9] and started at the midpoint 0.7.
    """

    def __init__(self, ms: MeasurementSet, targets: dict):
        self.n_b = ms.n_b
        self.bpairs = boundary_pairs(ms.n_b)
        self.pair_idx = {p: k for k, p in enumerate(self.bpairs)}
        self.targets = np.array([targets[p] for p in self.bpairs])
        self.measured = np.array([p in ms.distances for p in self.bpairs])
        self.w_pairs = [p for p in self.bpairs if p not in ms.distances]
        self.n_w = len(self.w_pairs)
        self.w_slot = {}
        slot = 0
        for p in self.bpairs:
            if p not in ms.distances:
                self.w_slot[p] = slot
                slot += 1

    def weights(self, w_vars: np.ndarray) -> np.ndarray:
        w = np.ones(len(self.bpairs))
        for p, slot in self.w_slot.items():
            w[self.pair_idx[p]] = w_vars[slot]
        return w

    def w0(self) -> np.ndarray:
        return np.full(self.n_w, 0.7)

    def constraint_terms(self, ms: MeasurementSet):
        """(plus_pairs, minus_pairs) index tuples for each DC residual.

        residual = sum(r[plus]) - sum(r[minus]) >= 0, with both sides convex
        in the conductances.
        """
        terms = []
        for t in cons.generate_triangle(ms):
            terms.append(((self.pair_idx[(t.i, t.j)], self.pair_idx[(t.j, t.k)]),
                          (self.pair_idx[(t.i, t.k)],)))
        if ms.n_b >= 4:
            for k in cons.generate_kalmanson(ms):
                plus = (self.pair_idx[(k.i, k.k)], self.pair_idx[(k.j, k.l)])
                if k.form == 1:
                    minus = (self.pair_idx[(k.i, k.j)], self.pair_idx[(k.k, k.l)])
                else:
                    minus = (self.pair_idx[(k.j, k.k)], self.pair_idx[(k.i, k.l)])
                terms.append((plus, minus))
        return terms


class ConductanceProblem:
    """Oracles for the conductance problems (Pi_2 and Pi_3).

    Decision vector v = [edge conductances, W entries].  The objective is the
    weighted squared distance error, plus a squared Kirchhoff-index error when
    ``k_target`` is given (computed over the full m-node network).
    """

    def __init__(self, m: int, pairs, ms: MeasurementSet, targets: dict,
                 lower, upper, k_target=None, feas_tol: float = 1e-6):
        self.m = m
        self.pairs = list(pairs)
        self.layout = ResidualLayout(ms, targets)
        self.k_target = k_target
        self.n_edges = len(self.pairs)
        self.dim = self.n_edges + self.layout.n_w
        self.feas_tol = feas_tol
        self.terms = self.layout.constraint_terms(ms)
        self.lower = np.concatenate([np.full(self.n_edges, lower),
                                     np.full(self.layout.n_w, 0.5)])
        self.upper = np.concatenate([np.full(self.n_edges, upper),
                                     np.full(self.layout.n_w, 0.9)])
        self._cache_key = None
        self._cache_val = None

    def _core(self, c: np.ndarray):
        key = c.tobytes()
        if key == self._cache_key:
            return self._cache_val
        r_vals, jac, k_val, k_grad = full_eval(
            self.m, self.pairs, c, self.layout.bpairs,
            want_kirchhoff=self.k_target is not None)
        self._cache_key = key
        self._cache_val = (r_vals, jac, k_val, k_grad)
        return self._cache_val

    def objective(self, v: np.ndarray):
        c = v[:self.n_edges]
        w = self.layout.weights(v[self.n_edges:])
        r_vals, jac, k_val, k_grad = self._core(c)
        resid = self.layout.targets - r_vals
        f = float(resid @ (w * resid))
        grad = np.zeros(self.dim)
        grad[:self.n_edges] = (-2.0 * w * resid) @ jac
        if self.k_target is not None:
            k_err = k_val - self.k_target
            f += k_err ** 2
            grad[:self.n_edges] += 2.0 * k_err * k_grad
        for pair, slot in self.layout.w_slot.items():
            grad[self.n_edges + slot] = resid[self.layout.pair_idx[pair]] ** 2
        return f, grad

    def objective_c(self, c: np.ndarray, w_vars: np.ndarray) -> float:
        """Objective at fixed weights; +inf when the network disconnects."""
        try:
            r_vals, _, k_val, _ = self._core(np.asarray(c, dtype=float))
        except SingularNetwork:
            return np.inf
        resid = self.layout.targets - r_vals
        w = self.layout.weights(w_vars)
        f = float(resid @ (w * resid))
        if self.k_target is not None:
            f += (k_val - self.k_target) ** 2
        return f

    def dc_constraints(self, v: np.ndarray):
        c = v[:self.n_edges]
        r_vals, jac, _, _ = self._core(c)
        return dc_terms_eval(self.terms, r_vals, jac, self.dim, self.n_edges)

    def constraint_residuals(self, c: np.ndarray) -> np.ndarray:
        r_vals, _, _, _ = self._core(np.asarray(c, dtype=float))
        out = np.empty(len(self.terms))
        for row, (plus, minus) in enumerate(self.terms):
            out[row] = sum(r_vals[k] for k in plus) - sum(r_vals[k] for k in minus)
        return out

    def hess_diag(self, v: np.ndarray) -> np.ndarray:
        """Gauss-Newton diagonal curvature estimate for step scaling."""
        out = np.zeros(self.dim)
        try:
            c = v[:self.n_edges]
            w = self.layout.weights(v[self.n_edges:])
            r_vals, jac, k_val, k_grad = self._core(c)
        except SingularNetwork:
            return np.ones(self.dim)
        out[:self.n_edges] = 2.0 * (w @ (jac * jac))
        if self.k_target is not None:
            out[:self.n_edges] += 2.0 * k_grad * k_grad
        return out

    def as_dc_problem(self):
        from .dccp import DcProblem
        return DcProblem(
            dim=self.dim,
            objective=self.objective,
            lower=self.lower,
            upper=self.upper,
            dc_constraints=self.dc_constraints if self.terms else None,
            hess_diag=self.hess_diag,
        )


def dc_terms_eval(terms, r_vals, jac, dim, var_cols=None):
    """Assemble (p_vals, p_jac, q_vals, q_jac) for sum-of-distances residuals.

    jac maps distances to the conductance-like variables occupying the first
    columns of the decision vector (var_cols columns when given).
    """
    n = len(terms)
    cols = jac.shape[1] if var_cols is None else var_cols
    p_vals = np.zeros(n)
    q_vals = np.zeros(n)
    p_jac = np.zeros((n, dim))
    q_jac = np.zeros((n, dim))
    for row, (plus, minus) in enumerate(terms):
        for idx in plus:
            p_vals[row] += r_vals[idx]
            p_jac[row, :cols] += jac[idx]
        for idx in minus:
            q_vals[row] += r_vals[idx]
            q_jac[row, :cols] += jac[idx]
    return p_vals, p_jac, q_vals, q_jac
