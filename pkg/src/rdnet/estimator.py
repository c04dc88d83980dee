"""Estimation of the unmeasured boundary resistance distances (problem I).

The unknown is the symmetric matrix X = (L + J/m)^-1 of the hidden network,
half-vectorised into x.  Measured distances, the row-sum identity X 1 = 1 and
the known Kirchhoff index give a linear system A x = [r; 1]; the estimate is
a point satisfying the system in the least-squares sense that is positive
definite and respects the triangle and Kalmanson inequalities.

The solver is an alternating-projection scheme: least-squares projection,
eigenvalue clipping onto the PD cone (floor 1e-8), and sequential halfspace
projections for the inequality constraints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import constraints as cons
from .netcore import MeasurementSet, RdnetError

PD_FLOOR = 1e-8


class Infeasible(RdnetError):
    """No positive definite point satisfied the constraints within budget."""


def _vech_index(m: int) -> dict:
    index = {}
    col = 0
    for s in range(1, m + 1):
        for t in range(s, m + 1):
            index[(s, t)] = col
            col += 1
    return index


def vech_to_sym(x: np.ndarray, m: int) -> np.ndarray:
    X = np.zeros((m, m))
    col = 0
    for s in range(m):
        for t in range(s, m):
            X[s, t] = X[t, s] = x[col]
            col += 1
    return X


def sym_to_vech(X: np.ndarray) -> np.ndarray:
    m = X.shape[0]
    return np.array([X[s, t] for s in range(m) for t in range(s, m)])


@dataclass
class LinearSystem:
    """The stacked linear equations A x = rhs over x = vech(X)."""

    A: np.ndarray
    rhs: np.ndarray
    m: int
    n_distance_rows: int


def assemble(ms: MeasurementSet) -> LinearSystem:
    """Build the measurement system for the given measurement set.

    Rows: |A|(|A|+1)/2 distance rows (the |A| diagonal ones are identically
    zero), m row-sum rows, and one Kirchhoff row assembled directly from the
    pairwise expansion of the index.
    """
    m = ms.m
    index = _vech_index(m)
    dim = m * (m + 1) // 2
    avail = sorted(ms.available)
    rows = []
    rhs = []
    for ai, s in enumerate(avail):
        for t in avail[ai:]:
            row = np.zeros(dim)
            if s == t:
                rows.append(row)
                rhs.append(0.0)
                continue
            row[index[(s, s)]] += 1.0
            row[index[(t, t)]] += 1.0
            row[index[(s, t)]] -= 2.0
            rows.append(row)
            rhs.append(ms.distances[(s, t)])
    n_distance = len(rows)
    for s in range(1, m + 1):
        row = np.zeros(dim)
        for t in range(1, m + 1):
            row[index[(min(s, t), max(s, t))]] += 1.0
        rows.append(row)
        rhs.append(1.0)
    k_row = np.zeros(dim)
    for s in range(1, m + 1):
        k_row[index[(s, s)]] += m - 1
        for t in range(s + 1, m + 1):
            k_row[index[(s, t)]] -= 2.0
    rows.append(k_row)
    rhs.append(ms.kirchhoff_index)
    return LinearSystem(np.array(rows), np.array(rhs), m, n_distance)


def _constraint_rows(ms: MeasurementSet, index: dict, dim: int):
    """Linear residual rows G with G x >= 0 for the triangle/Kalmanson sets."""
    tri = cons.generate_triangle(ms)
    kal = cons.generate_kalmanson(ms) if ms.n_b >= 4 else ()

    def add_pair(row, a, b, sign):
        row[index[(a, a)]] += sign
        row[index[(b, b)]] += sign
        row[index[(min(a, b), max(a, b))]] -= 2.0 * sign

    rows = []
    for c in tri:
        row = np.zeros(dim)
        add_pair(row, c.i, c.j, +1.0)
        add_pair(row, c.j, c.k, +1.0)
        add_pair(row, c.i, c.k, -1.0)
        rows.append(row)
    for c in kal:
        row = np.zeros(dim)
        add_pair(row, c.i, c.k, +1.0)
        add_pair(row, c.j, c.l, +1.0)
        if c.form == 1:
            add_pair(row, c.i, c.j, -1.0)
            add_pair(row, c.k, c.l, -1.0)
        else:
            add_pair(row, c.j, c.k, -1.0)
            add_pair(row, c.i, c.l, -1.0)
        rows.append(row)
    if not rows:
        return np.zeros((0, dim))
    return np.array(rows)


@dataclass
class DistanceEstimate:
    """Result of problem I: estimated X, full distance matrix and diagnostics."""

    X_hat: np.ndarray
    R_hat: np.ndarray
    residual: float
    min_eig: float
    worst_violation: float
    iterations: int

    def estimated_pairs(self, ms: MeasurementSet) -> dict:
        """Boundary-pair distances taken from R_hat for pairs touching U_B."""
        out = {}
        unavailable = set(ms.unavailable_boundary)
        for i in range(1, ms.n_b + 1):
            for j in range(i + 1, ms.n_b + 1):
                if {i, j} & unavailable:
                    out[(i, j)] = float(self.R_hat[i - 1, j - 1])
        return out


def _pd_clip(x: np.ndarray, m: int):
    X = vech_to_sym(x, m)
    w, V = np.linalg.eigh(X)
    clipped = np.maximum(w, PD_FLOOR)
    if np.all(w >= PD_FLOOR):
        return x, float(w[0])
    Xc = (V * clipped) @ V.T
    return sym_to_vech(Xc), float(w[0])


def _pair_objective(index: dict, dim: int, i: int, j: int) -> np.ndarray:
    """Gradient row of r_ij = x_ii + x_jj - 2 x_ij."""
    row = np.zeros(dim)
    row[index[(i, i)]] += 1.0
    row[index[(j, j)]] += 1.0
    row[index[(min(i, j), max(i, j))]] -= 2.0
    return row


def _project_feasible(x, m, pinv, A, rhs, G, G_norm2, passes=1):
    """A few rounds of LS / PD / halfspace projections."""
    for _ in range(passes):
        x = x - pinv @ (A @ x - rhs)
        x, _ = _pd_clip(x, m)
        if G.size:
            vals = G @ x
            for c in np.nonzero(vals < 0)[0]:
                x = x - (G[c] @ x) / G_norm2[c] * G[c]
    return x


def _interval_extreme(x0, cvec, sign, m, pinv, A, rhs, G, G_norm2,
                      iters=600, eta0=0.08):
    """Approximate extreme of a linear functional over the feasible set.

    Projected supergradient ascent: push along +-cvec, then re-project onto
    the measurement/PD/inequality sets; the step shrinks on a schedule.
    """
    x = x0.copy()
    eta = eta0
    for it in range(iters):
        x = x + sign * eta * cvec
        x = _project_feasible(x, m, pinv, A, rhs, G, G_norm2, passes=4)
        if (it + 1) % 150 == 0:
            eta *= 0.45
    return float(cvec @ x)


def estimate(ms: MeasurementSet, max_iter: int = 5000, step_tol: float = 1e-9,
             feas_tol: float = 1e-6, refine: bool = True,
             extreme_iters: int = 600) -> DistanceEstimate:
    """Solve problem I: alternating projections plus interval-midpoint refinement.

    The projection loop (least-squares step, PD eigenvalue clip, halfspace
    steps) lands on one feasible completion; since the data generally admit a
    whole region of them, each unmeasured boundary distance is then re-centred
    at the midpoint of its feasible interval (the minimax choice over exactly
    the constraint set), and the result is re-fit for coherence.
    """
    system = assemble(ms)
    m = system.m
    dim = system.A.shape[1]
    index = _vech_index(m)
    G = _constraint_rows(ms, index, dim)
    G_norm2 = np.sum(G * G, axis=1) if G.size else np.zeros(0)
    pinv = np.linalg.pinv(system.A)

    x = pinv @ system.rhs
    iterations = 0
    for iterations in range(1, max_iter + 1):
        x_prev = x
        x = x - pinv @ (system.A @ x - system.rhs)
        x, _ = _pd_clip(x, m)
        if G.size:
            vals = G @ x
            for c in np.nonzero(vals < 0)[0]:
                x = x - (G[c] @ x) / G_norm2[c] * G[c]
        if float(np.linalg.norm(x - x_prev)) < step_tol:
            break

    unknown_pairs = []
    unavailable = set(ms.unavailable_boundary)
    for i in range(1, ms.n_b + 1):
        for j in range(i + 1, ms.n_b + 1):
            if {i, j} & unavailable:
                unknown_pairs.append((i, j))
    if refine and unknown_pairs:
        midpoints = {}
        for i, j in unknown_pairs:
            cvec = _pair_objective(index, dim, i, j)
            lo = _interval_extreme(x, cvec, -1.0, m, pinv, system.A, system.rhs,
                                   G, G_norm2, iters=extreme_iters)
            hi = _interval_extreme(x, cvec, +1.0, m, pinv, system.A, system.rhs,
                                   G, G_norm2, iters=extreme_iters)
            midpoints[(i, j)] = 0.5 * (lo + hi)
        extra_rows = []
        extra_rhs = []
        for (i, j), value in midpoints.items():
            extra_rows.append(_pair_objective(index, dim, i, j))
            extra_rhs.append(value)
        A_aug = np.vstack([system.A, np.array(extra_rows)])
        rhs_aug = np.concatenate([system.rhs, np.array(extra_rhs)])
        x = np.linalg.pinv(A_aug) @ rhs_aug
        # Re-project onto the original (exactly consistent) constraint set so
        # the returned completion is a fixed point of the solver itself.
        for _ in range(500):
            x_prev = x
            x = _project_feasible(x, m, pinv, system.A, system.rhs, G, G_norm2)
            if float(np.linalg.norm(x - x_prev)) < step_tol:
                break

    # Feasibility polish: stop touching the data rows and settle PD + inequalities.
    for _ in range(500):
        x, min_eig = _pd_clip(x, m)
        worst = 0.0
        if G.size:
            vals = G @ x
            worst = max(0.0, float(-np.min(vals)))
            for c in np.nonzero(vals < -1e-12)[0]:
                x = x - (G[c] @ x) / G_norm2[c] * G[c]
        if worst <= 1e-9 and min_eig >= PD_FLOOR - 1e-12:
            break

    X = vech_to_sym(x, m)
    w = np.linalg.eigvalsh(X)
    d = np.diag(X)
    R = d[:, None] + d[None, :] - 2.0 * X
    np.fill_diagonal(R, 0.0)
    worst = 0.0
    if G.size:
        worst = max(0.0, float(-np.min(G @ x)))
    if worst > feas_tol or w[0] < PD_FLOOR * 0.5:
        raise Infeasible(
            f"no PD point satisfied the constraints (violation {worst:.2e}, "
            f"min eig {w[0]:.2e})"
        )
    residual = float(np.linalg.norm(system.A @ x - system.rhs))
    return DistanceEstimate(X, R, residual, float(w[0]), worst, iterations)
