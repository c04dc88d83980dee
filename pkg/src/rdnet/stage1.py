"""Stage 1: initial-guess construction, switch optimisation and Gamma_aux.

The guess builder walks an integer-resistance network on the maximal circular
planar topology, repeatedly shrinking the largest resistance-distance error
with four local operations (delete / +1 ohm / add / -1 ohm).  The resulting
network seeds the relaxed switch problem, whose solution is rounded back to
booleans coordinate-wise and collapsed into the auxiliary boundary network.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._solverbits import ResidualLayout, boundary_eval, dc_terms_eval
from .dccp import CcpOptions, DcProblem, solve
from .mprsn import Mprsn
from .netcore import (
    INFINITE_RESISTANCE,
    MeasurementSet,
    Network,
    RdnetError,
    SingularNetwork,
    boundary_pairs,
    is_infinite,
    pair_distances,
)


class Exhausted(RdnetError):
    """Every candidate pair has been excluded."""


class GuardViolated(RdnetError):
    """An operation's precondition failed; the caller falls through."""


class BothInvalid(RdnetError):
    """Neither of the two candidate operations improves the targeted error."""


def indexmax(errors: dict, exclude=frozenset()):
    """Pair with the largest absolute error, lexicographic tie-break."""
    best = None
    for pair in sorted(errors):
        if pair in exclude:
            continue
        err = errors[pair]
        mag = abs(err)
        if best is None:
            best = (pair, mag)
        elif is_infinite(mag):
            if not is_infinite(best[1]):
                best = (pair, mag)
        elif not is_infinite(best[1]) and mag > best[1]:
            best = (pair, mag)
    if best is None:
        raise Exhausted("all pairs excluded")
    return best[0]


@dataclass
class GuessState:
    """Integer-resistance network during the initial-guess iteration."""

    n_b: int
    resistances: dict
    deleted: set = field(default_factory=set)
    added: set = field(default_factory=set)
    iteration: int = 0

    def copy(self) -> "GuessState":
        return GuessState(self.n_b, dict(self.resistances),
                          set(self.deleted), set(self.added), self.iteration)

    def network(self) -> Network:
        return Network(self.n_b, 0,
                       [(u, v, 1.0 / r) for (u, v), r in self.resistances.items()])

    def degree(self, node: int) -> int:
        return sum(1 for (u, v) in self.resistances if node in (u, v))

    def canonical(self):
        return tuple(sorted(self.resistances.items()))


def distance_errors(state: GuessState, targets: dict, pairs=None) -> dict:
    """Signed errors model-minus-target; INFINITE for disconnected pairs."""
    if pairs is None:
        pairs = boundary_pairs(state.n_b)
    model = pair_distances(state.network(), list(pairs))
    out = {}
    for pair, value in zip(pairs, model):
        if is_infinite(value):
            out[pair] = INFINITE_RESISTANCE
        else:
            out[pair] = value - targets[pair]
    return out


@dataclass
class OpCandidate:
    state: GuessState
    post_error: object
    valid: bool


def _error_at(state: GuessState, pair, targets):
    value = pair_distances(state.network(), [pair])[0]
    if is_infinite(value):
        return INFINITE_RESISTANCE
    return value - targets[pair]


def _improves(post, pre) -> bool:
    if is_infinite(post):
        return False
    if is_infinite(pre):
        return True
    return abs(post) < abs(pre)


def op1_delete(state: GuessState, pair, targets) -> OpCandidate:
    """Edge deletion; refuses on the floating-edge guard."""
    pair = (min(pair), max(pair))
    if pair not in state.resistances:
        raise GuardViolated(f"edge {pair} not present")
    pre = _error_at(state, pair, targets)
    if not (is_infinite(pre) or pre < 0):
        raise GuardViolated("deletion requires a negative error")
    s, t = pair
    if state.degree(s) == 1 or state.degree(t) == 1:
        raise GuardViolated(f"deleting {pair} would float a node")
    cand = state.copy()
    del cand.resistances[pair]
    cand.deleted.add(pair)
    cand.added.discard(pair)
    post = _error_at(cand, pair, targets)
    return OpCandidate(cand, post, _improves(post, pre))


def op2_increase(state: GuessState, pair, targets, r_max: float) -> OpCandidate:
    """Increase edge resistance by 1 ohm; refuses at r_max."""
    pair = (min(pair), max(pair))
    if pair not in state.resistances:
        raise GuardViolated(f"edge {pair} not present")
    pre = _error_at(state, pair, targets)
    if not (is_infinite(pre) or pre < 0):
        raise GuardViolated("increase requires a negative error")
    if not state.resistances[pair] < r_max:
        raise GuardViolated(f"edge {pair} already at r_max")
    cand = state.copy()
    cand.resistances[pair] += 1
    post = _error_at(cand, pair, targets)
    return OpCandidate(cand, post, _improves(post, pre))


def op3_add(state: GuessState, pair, targets) -> OpCandidate:
    """Add a 1-ohm edge; requires the error to be positive."""
    pair = (min(pair), max(pair))
    if pair in state.resistances:
        raise GuardViolated(f"edge {pair} already present")
    pre = _error_at(state, pair, targets)
    if not (is_infinite(pre) or pre > 0):
        raise GuardViolated("addition requires a positive error")
    cand = state.copy()
    cand.resistances[pair] = 1
    if pair in cand.deleted:
        cand.deleted.discard(pair)
    else:
        cand.added.add(pair)
    post = _error_at(cand, pair, targets)
    return OpCandidate(cand, post, _improves(post, pre))


def op4_decrease(state: GuessState, pair, targets) -> OpCandidate:
    """Decrease edge resistance by 1 ohm; requires r >= 2."""
    pair = (min(pair), max(pair))
    if pair not in state.resistances:
        raise GuardViolated(f"edge {pair} not present")
    pre = _error_at(state, pair, targets)
    if not (is_infinite(pre) or pre > 0):
        raise GuardViolated("decrease requires a positive error")
    if state.resistances[pair] < 2:
        raise GuardViolated("resistance already at 1 ohm")
    cand = state.copy()
    cand.resistances[pair] -= 1
    post = _error_at(cand, pair, targets)
    return OpCandidate(cand, post, _improves(post, pre))


def op_select(cand1, cand2) -> OpCandidate:
    """Pick the valid candidate with the smaller post-operation error.

    Candidates may be None (guard violated).  Raises BothInvalid when nothing
    qualifies so the caller can move on to the next pair.
    """
    live = [c for c in (cand1, cand2) if c is not None and c.valid]
    if not live:
        raise BothInvalid("no valid operation for this pair")
    if len(live) == 1:
        return live[0]

    def mag(c):
        return np.inf if is_infinite(c.post_error) else abs(c.post_error)

    return live[0] if mag(live[0]) <= mag(live[1]) else live[1]


def encode_network(m: Mprsn, resistances: dict) -> np.ndarray:
    """Map an integer-resistance boundary network to boolean switch positions."""
    rho = np.zeros(m.t)
    for gadget in m.gadgets:
        pair = (min(gadget.i, gadget.j), max(gadget.i, gadget.j))
        if pair not in resistances:
            continue
        chain_state, q = gadget.encode_resistance(Fraction(resistances[pair]))
        for slot, on in zip(gadget.chain_slots, chain_state):
            rho[slot] = float(on)
        rho[gadget.tap_slots[q - 1]] = 1.0
    return rho


@dataclass
class GuessResult:
    state: GuessState
    rho0: np.ndarray
    iterations: int
    reached_eps: bool
    errors: dict
    trace: list


def build_initial_guess(m: Mprsn, ms: MeasurementSet, estimated: dict,
                        eps: float | None = None,
                        max_iter: int | None = None) -> GuessResult:
    """Run the iterative integer-resistance guess and encode it as switches.

    ``estimated`` supplies target distances for every boundary pair not
    measured directly.  eps defaults to 5% of the largest measured distance.
    """
    targets = dict(estimated)
    targets.update(ms.distances)
    emax_pairs = list(m.base_edges)
    for pair in emax_pairs:
        if pair not in targets:
            raise RdnetError(f"no target distance for pair {pair}")
    if eps is None:
        eps = 0.05 * max(ms.distances.values())
    if max_iter is None:
        max_iter = 50 * len(emax_pairs)

    state = GuessState(ms.n_b, {pair: 1 for pair in emax_pairs})
    visited = {state.canonical()}
    trace = []
    reached = False
    iterations = 0
    r_max = ms.r_max

    for iterations in range(1, max_iter + 1):
        errors = distance_errors(state, targets, emax_pairs)
        worst = max(abs(e) if not is_infinite(e) else np.inf for e in errors.values())
        trace.append(worst)
        if worst <= eps:
            reached = True
            break
        tried = set()
        committed = None
        while committed is None:
            try:
                pair = indexmax(errors, tried)
            except Exhausted:
                break
            err = errors[pair]
            present = pair in state.resistances
            if abs(err) <= eps and not is_infinite(err):
                break
            negative = (not is_infinite(err)) and err < 0
            positive = is_infinite(err) or err > 0
            if negative and present:
                cand1 = _try(op1_delete, state, pair, targets)
                cand2 = _try(op2_increase, state, pair, targets, r_max)
                try:
                    committed = op_select(cand1, cand2).state
                except BothInvalid:
                    tried.add(pair)
            elif negative:
                tried.add(pair)
            elif positive and not present:
                cand = _try(op3_add, state, pair, targets)
                if cand is not None and cand.valid:
                    committed = cand.state
                else:
                    tried.add(pair)
            elif positive:
                cand = _try(op4_decrease, state, pair, targets)
                if cand is not None and cand.valid:
                    committed = cand.state
                else:
                    tried.add(pair)
            else:
                tried.add(pair)
        if committed is None:
            break
        key = committed.canonical()
        if key in visited:
            break
        visited.add(key)
        committed.iteration = iterations
        state = committed

    rho0 = encode_network(m, state.resistances)
    final_errors = distance_errors(state, targets, emax_pairs)
    return GuessResult(state, rho0, iterations, reached, final_errors, trace)


def _try(op, *args):
    try:
        return op(*args)
    except GuardViolated:
        return None


# ---------------------------------------------------------------------------
# Problem Pi_1 over the relaxed switch vector
# ---------------------------------------------------------------------------

class Pi1Problem:
    """Oracles for the switch problem: objective, DC constraints, one-hot rows."""

    def __init__(self, m: Mprsn, ms: MeasurementSet, estimated: dict,
                 feas_tol: float = 1e-6):
        targets = dict(estimated)
        targets.update(ms.distances)
        self.mprsn = m
        self.ms = ms
        self.layout = ResidualLayout(ms, targets)
        fixed_pairs, fixed_g, sw_pairs, sw_scale, sw_slot = m.switch_structure()
        self.all_pairs = list(fixed_pairs) + list(sw_pairs)
        self.fixed_g = np.asarray(fixed_g)
        self.sw_scale = np.asarray(sw_scale)
        self.sw_slot = np.asarray(sw_slot, dtype=int)
        self.n_fixed = len(fixed_pairs)
        self.t = m.t
        self.dim = m.t + self.layout.n_w
        self.terms = self.layout.constraint_terms(ms)
        self.feas_tol = feas_tol
        self._cache_key = None
        self._cache_val = None

    def _conductances(self, rho: np.ndarray) -> np.ndarray:
        return np.concatenate([self.fixed_g, rho[self.sw_slot] * self.sw_scale])

    def _core(self, rho: np.ndarray):
        key = rho.tobytes()
        if key == self._cache_key:
            return self._cache_val
        c = self._conductances(rho)
        r_vals, jac_c = boundary_eval(self.mprsn.node_count, self.all_pairs,
                                      c, self.layout.bpairs)
        jac_sw = jac_c[:, self.n_fixed:] * self.sw_scale[None, :]
        jac_rho = np.zeros((len(self.layout.bpairs), self.t))
        jac_rho[:, self.sw_slot] = jac_sw
        self._cache_key = key
        self._cache_val = (r_vals, jac_rho)
        return self._cache_val

    def objective(self, v: np.ndarray):
        rho = v[:self.t]
        w = self.layout.weights(v[self.t:])
        r_vals, jac_rho = self._core(rho)
        resid = self.layout.targets - r_vals
        f = float(resid @ (w * resid))
        grad = np.zeros(self.dim)
        grad[:self.t] = (-2.0 * w * resid) @ jac_rho
        for pair, slot in self.layout.w_slot.items():
            grad[self.t + slot] = resid[self.layout.pair_idx[pair]] ** 2
        return f, grad

    def objective_rho(self, rho: np.ndarray, w_vars: np.ndarray) -> float:
        """Objective at fixed weights; +inf when the boundary disconnects."""
        try:
            r_vals, _ = self._core(np.asarray(rho, dtype=float))
        except SingularNetwork:
            return np.inf
        resid = self.layout.targets - r_vals
        w = self.layout.weights(w_vars)
        return float(resid @ (w * resid))

    def dc_constraints(self, v: np.ndarray):
        rho = v[:self.t]
        r_vals, jac_rho = self._core(rho)
        return dc_terms_eval(self.terms, r_vals, jac_rho, self.dim, self.t)

    def convex_constraints(self, v: np.ndarray):
        """One-hot tap rows: sum of a gadget's connector switches <= 1."""
        gadgets = self.mprsn.gadgets
        vals = np.zeros(len(gadgets))
        jac = np.zeros((len(gadgets), self.dim))
        for row, g in enumerate(gadgets):
            slots = list(g.tap_slots)
            vals[row] = float(np.sum(v[slots])) - 1.0
            jac[row, slots] = 1.0
        return vals, jac

    def constraint_residuals(self, rho: np.ndarray) -> np.ndarray:
        r_vals, _ = self._core(np.asarray(rho, dtype=float))
        out = np.empty(len(self.terms))
        for row, (plus, minus) in enumerate(self.terms):
            out[row] = sum(r_vals[k] for k in plus) - sum(r_vals[k] for k in minus)
        return out

    def feasible(self, rho: np.ndarray) -> bool:
        try:
            res = self.constraint_residuals(rho)
        except SingularNetwork:
            return False
        return bool(np.all(res >= -self.feas_tol))

    def hess_diag(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros(self.dim)
        try:
            rho = v[:self.t]
            w = self.layout.weights(v[self.t:])
            _, jac_rho = self._core(rho)
        except SingularNetwork:
            return np.ones(self.dim)
        out[:self.t] = 2.0 * (w @ (jac_rho * jac_rho))
        return out

    def as_dc_problem(self) -> DcProblem:
        lower = np.zeros(self.dim)
        upper = np.ones(self.dim)
        lower[self.t:] = 0.5
        upper[self.t:] = 0.9
        return DcProblem(
            dim=self.dim,
            objective=self.objective,
            lower=lower,
            upper=upper,
            convex_constraints=self.convex_constraints,
            dc_constraints=self.dc_constraints if self.terms else None,
            hess_diag=self.hess_diag,
        )


@dataclass
class SwitchSolution:
    rho: np.ndarray
    weights: dict
    objective: float
    report: dict


def solve_pi1(m: Mprsn, ms: MeasurementSet, estimated: dict, rho0: np.ndarray,
              opts: CcpOptions | None = None,
              problem: Pi1Problem | None = None) -> SwitchSolution:
    """Optimise the relaxed switch vector from the boolean initial guess."""
    if problem is None:
        problem = Pi1Problem(m, ms, estimated, feas_tol=(opts or CcpOptions()).feas_tol)
    v0 = np.concatenate([np.asarray(rho0, dtype=float), problem.layout.w0()])
    v, report = solve(problem.as_dc_problem(), v0, opts)
    weights = {pair: float(v[problem.t + slot])
               for pair, slot in problem.layout.w_slot.items()}
    return SwitchSolution(v[:problem.t], weights, report["objective"], report)


def round_down(rho: np.ndarray, objective, feasible, snap: float = 1e-9) -> np.ndarray:
    """Coordinate-wise boolean rounding guided by the discrete derivative.

    For each fractional coordinate the objective is probed at 0 and 1 with the
    other coordinates held as they are; the preferred value follows the sign of
    the difference, and the flip is reverted when the triangle/Kalmanson check
    rejects the flipped vector.  Coordinates already at a bound are snapped.
    """
    q = np.asarray(rho, dtype=float).copy()
    for idx in range(q.size):
        value = q[idx]
        if value <= snap:
            q[idx] = 0.0
            continue
        if value >= 1.0 - snap:
            q[idx] = 1.0
            continue
        probe1 = q.copy()
        probe1[idx] = 1.0
        probe0 = q.copy()
        probe0[idx] = 0.0
        f1 = objective(probe1)
        f0 = objective(probe0)
        if np.isinf(f1) and np.isinf(f0):
            primary, fallback = 0.0, 1.0
        elif f1 - f0 > 0:
            primary, fallback = 0.0, 1.0
        elif f1 - f0 < 0:
            primary, fallback = 1.0, 0.0
        else:
            primary, fallback = 0.0, 1.0
        q[idx] = primary
        if not feasible(q):
            q[idx] = fallback
    return q


def round_pi1(sol: SwitchSolution, problem: Pi1Problem) -> np.ndarray:
    w_vars = np.array([sol.weights[p] for p in problem.layout.w_pairs]) \
        if problem.layout.w_pairs else np.zeros(0)
    return round_down(
        sol.rho,
        lambda r: problem.objective_rho(r, w_vars),
        problem.feasible,
    )


def extract_aux(m: Mprsn, x: np.ndarray) -> Network:
    """Collapse boolean switch positions into the boundary-only network.

    Each gadget reduces to the series combination of its component-A state
    with the parallel bank of closed taps; gadgets whose connector switches
    are all open contribute no edge.
    """
    x = np.asarray(x, dtype=float)
    edges = []
    for gadget in m.gadgets:
        chain_state = tuple(int(round(x[s])) for s in gadget.chain_slots)
        taps_on = [q for q, slot in enumerate(gadget.tap_slots, start=1)
                   if round(x[slot]) >= 1]
        r = gadget.gadget_resistance(chain_state, taps_on)
        if r is INFINITE_RESISTANCE:
            continue
        pair = (min(gadget.i, gadget.j), max(gadget.i, gadget.j))
        edges.append((pair[0], pair[1], float(1 / Fraction(r))))
    return Network(m.n_b, 0, edges)
