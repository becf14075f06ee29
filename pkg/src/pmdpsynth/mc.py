"""Numeric model checking for instantiated MDPs.

The checker precompiles a pMDP into flat float buffers once; successive
valuations only rewrite the parameter-dependent matrix entries, which keeps
repeated checking cheap inside the synthesis loops. Fast queries use value
iteration; certification re-solves the induced chain of the extremal
strategy with a direct sparse linear solve (policy iteration to a stable
strategy). A brute-force strategy-enumeration oracle with exact rational
chain solves backs the tests.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .model import ConcreteMDP, Instantiation, PMDP, Specification

DEFAULT_TOL = 1e-8
HOLDS_SLACK = 1e-6      # absolute slack when comparing against the threshold
_MAX_SWEEPS = 500_000


class InstanceTooLargeError(Exception):
    pass


@dataclass
class McResult:
    values: np.ndarray           # per-state value
    strategy: np.ndarray         # per-state chosen action index
    residual: float


class Checker:
    """Model checker bound to one pMDP; owns a mutable matrix buffer.

    Not thread-safe; use one instance per thread.
    """

    def __init__(self, m: PMDP):
        self.model = m
        self.ns = m.num_states
        state_of_sa = []
        sa_ptr = [0]
        t_ptr = [0]
        t_col: list[int] = []
        t_base: list[float] = []
        upd_pos: list[int] = []
        upd_param: list[int] = []
        upd_coef: list[float] = []
        costs: list[float] = []
        param_index = {p: i for i, p in enumerate(m.params)}
        for s in range(self.ns):
            for a in range(len(m.actions[s])):
                state_of_sa.append(s)
                costs.append(float(m.costs.get((s, a), 0)) if m.costs else 0.0)
                for dest, expr in m.transitions[(s, a)]:
                    pos = len(t_col)
                    t_col.append(dest)
                    t_base.append(float(expr.constant))
                    for name, coef in expr.coefficients:
                        upd_pos.append(pos)
                        upd_param.append(param_index[name])
                        upd_coef.append(float(coef))
                t_ptr.append(len(t_col))
            sa_ptr.append(len(state_of_sa))
        self.state_of_sa = np.array(state_of_sa, dtype=np.int64)
        self.sa_ptr = np.array(sa_ptr, dtype=np.int64)
        self.t_ptr = np.array(t_ptr, dtype=np.int64)
        self.t_col = np.array(t_col, dtype=np.int64)
        self.t_base = np.array(t_base, dtype=np.float64)
        self.upd_pos = np.array(upd_pos, dtype=np.int64)
        self.upd_param = np.array(upd_param, dtype=np.int64)
        self.upd_coef = np.array(upd_coef, dtype=np.float64)
        self.costs = np.array(costs, dtype=np.float64)
        self.t_val = self.t_base.copy()
        self.nsa = len(state_of_sa)

    def set_valuation(self, u) -> None:
        """u: mapping param-name -> value, or array ordered like model.params."""
        if isinstance(u, dict):
            vals = np.array([float(u[p]) for p in self.model.params])
        else:
            vals = np.asarray(u, dtype=np.float64)
        self.t_val = self.t_base.copy()
        if len(self.upd_pos):
            np.add.at(self.t_val, self.upd_pos, self.upd_coef * vals[self.upd_param])

    # -- value iteration ---------------------------------------------------

    def _sweep(self, x: np.ndarray, opt: str, with_costs: bool) -> np.ndarray:
        sa_vals = np.add.reduceat(self.t_val * x[self.t_col], self.t_ptr[:-1])
        if with_costs:
            sa_vals = sa_vals + self.costs
        reducer = np.maximum if opt == "max" else np.minimum
        return reducer.reduceat(sa_vals, self.sa_ptr[:-1]), sa_vals

    def _extract_strategy(self, x: np.ndarray, opt: str, with_costs: bool) -> np.ndarray:
        state_vals, sa_vals = self._sweep(x, opt, with_costs)
        hit = sa_vals == state_vals[self.state_of_sa]
        idx = np.where(hit, np.arange(self.nsa), self.nsa)
        first = np.minimum.reduceat(idx, self.sa_ptr[:-1])
        first = np.minimum(first, self.nsa - 1)
        return (first - self.sa_ptr[:-1]).astype(np.int64)

    def reach_values(self, opt: str = "max", tol: float = DEFAULT_TOL,
                     targets: frozenset[int] | None = None) -> McResult:
        """Extremal probability of reaching the target set, per state."""
        T = targets if targets is not None else self.model.targets
        tmask = np.zeros(self.ns, dtype=bool)
        tmask[list(T)] = True
        x = np.zeros(self.ns)
        x[tmask] = 1.0
        residual = np.inf
        for _ in range(_MAX_SWEEPS):
            new, _ = self._sweep(x, opt, with_costs=False)
            new[tmask] = 1.0
            residual = float(np.max(np.abs(new - x)))
            x = new
            if residual < tol:
                break
        strat = self._extract_strategy(x, opt, with_costs=False)
        x[tmask] = 1.0
        return McResult(x, strat, residual)

    def cost_values(self, opt: str = "max", tol: float = DEFAULT_TOL,
                    goals: frozenset[int] | None = None) -> McResult:
        """Extremal expected total cost to reach the goal set, per state.

        Requires the goal to be reached almost surely (checked upstream by
        the graph analysis); otherwise iteration diverges.
        """
        G = goals if goals is not None else self.model.targets
        gmask = np.zeros(self.ns, dtype=bool)
        gmask[list(G)] = True
        x = np.zeros(self.ns)
        residual = np.inf
        for _ in range(_MAX_SWEEPS):
            new, _ = self._sweep(x, opt, with_costs=True)
            new[gmask] = 0.0
            residual = float(np.max(np.abs(new - x)))
            x = new
            if residual < tol:
                break
        strat = self._extract_strategy(x, opt, with_costs=True)
        x[gmask] = 0.0
        return McResult(x, strat, residual)

    # -- certification via direct solves -----------------------------------

    def _chain_rows(self, strategy: np.ndarray):
        rows = self.sa_ptr[:-1] + strategy
        return rows

    def _evaluate_strategy(self, strategy: np.ndarray, kind: str,
                           T: frozenset[int]) -> np.ndarray:
        """Value of the induced chain by a direct sparse linear solve."""
        rows = self._chain_rows(strategy)
        starts = self.t_ptr[rows]
        ends = self.t_ptr[rows + 1]
        src = np.repeat(np.arange(self.ns), ends - starts)
        take = np.concatenate([np.arange(a, b) for a, b in zip(starts, ends)]) \
            if self.ns else np.array([], dtype=np.int64)
        col = self.t_col[take]
        val = self.t_val[take]
        P = sp.csr_matrix((val, (src, col)), shape=(self.ns, self.ns))
        tmask = np.zeros(self.ns, dtype=bool)
        tmask[list(T)] = True
        if kind == "reach":
            # States with a chain path into T; everything else has value 0.
            can = _backward_reachable(P, tmask)
            q = can & ~tmask
            x = np.zeros(self.ns)
            x[tmask] = 1.0
            if q.any():
                qi = np.where(q)[0]
                A = sp.eye(len(qi), format="csr") - P[qi][:, qi]
                b = np.asarray(P[qi][:, tmask].sum(axis=1)).ravel()
                x[qi] = spla.spsolve(A.tocsc(), b)
            return x
        q = ~tmask
        x = np.zeros(self.ns)
        if q.any():
            qi = np.where(q)[0]
            A = sp.eye(len(qi), format="csr") - P[qi][:, qi]
            b = self.costs[rows[qi]]
            x[qi] = spla.spsolve(A.tocsc(), b)
        return x

    def certified_values(self, kind: str, opt: str,
                         T: frozenset[int] | None = None,
                         vi_tol: float = DEFAULT_TOL) -> McResult:
        """Policy iteration seeded by value iteration, each evaluation via a
        direct solve of the induced chain. Returns the stable-strategy value."""
        T = T if T is not None else self.model.targets
        if kind == "reach":
            res = self.reach_values(opt, vi_tol, T)
        else:
            res = self.cost_values(opt, vi_tol, T)
        strategy = res.strategy.copy()
        with_costs = kind == "cost"
        improve_eps = 1e-11
        x = self._evaluate_strategy(strategy, kind, T)
        for _ in range(100):
            sa_vals = np.add.reduceat(self.t_val * x[self.t_col], self.t_ptr[:-1])
            if with_costs:
                sa_vals = sa_vals + self.costs
            cur = sa_vals[self._chain_rows(strategy)]
            if opt == "max":
                best, _ = self._sweep(x, "max", with_costs)
                gain = best - cur
            else:
                best, _ = self._sweep(x, "min", with_costs)
                gain = cur - best
            if np.max(gain) <= improve_eps * max(1.0, float(np.max(np.abs(x)))):
                break
            new_strat = self._extract_strategy(x, opt, with_costs)
            upd = gain > improve_eps * max(1.0, float(np.max(np.abs(x))))
            strategy[upd] = new_strat[upd]
            x = self._evaluate_strategy(strategy, kind, T)
        residual = float(np.max(np.abs(x - res.values))) if self.ns else 0.0
        return McResult(x, strategy, residual)

    def check(self, u: Instantiation | dict, spec: Specification,
              tol: float = DEFAULT_TOL, certified: bool = True):
        """Worst-case (all-strategies) verdict for the spec at valuation u.

        Returns (holds, value). at-most specs quantify the maximizing
        adversary, at-least specs the minimizing one.
        """
        self.set_valuation(u)
        opt = "max" if spec.direction == "at-most" else "min"
        if certified:
            res = self.certified_values(spec.kind, opt, vi_tol=tol)
        elif spec.kind == "reach":
            res = self.reach_values(opt, tol)
        else:
            res = self.cost_values(opt, tol)
        value = float(res.values[self.model.initial])
        thr = float(spec.threshold)
        if spec.direction == "at-most":
            holds = value <= thr + HOLDS_SLACK
        else:
            holds = value >= thr - HOLDS_SLACK
        return holds, value


def _backward_reachable(P: sp.csr_matrix, tmask: np.ndarray) -> np.ndarray:
    Pt = P.T.tocsr()
    seen = tmask.copy()
    stack = list(np.where(tmask)[0])
    while stack:
        s = stack.pop()
        for p in Pt.indices[Pt.indptr[s]:Pt.indptr[s + 1]]:
            if not seen[p]:
                seen[p] = True
                stack.append(int(p))
    return seen


# -- standalone entry points over concrete MDPs ----------------------------

def _checker_for_concrete(mdp: ConcreteMDP) -> Checker:
    from .model import AffineExpr, PMDP
    trans = {k: tuple((d, AffineExpr.const(v)) for d, v in row)
             for k, row in mdp.transitions.items()}
    m = PMDP(mdp.state_names, mdp.initial, (), {}, mdp.actions, trans,
             mdp.targets, dict(mdp.costs) if mdp.costs else None)
    return Checker(m)


def extremal_reach(mdp: ConcreteMDP, T: frozenset[int], opt: str = "max",
                   tol: float = DEFAULT_TOL) -> McResult:
    return _checker_for_concrete(mdp).reach_values(opt, tol, frozenset(T))


def extremal_cost(mdp: ConcreteMDP, G: frozenset[int], opt: str = "max",
                  tol: float = DEFAULT_TOL) -> McResult:
    return _checker_for_concrete(mdp).cost_values(opt, tol, frozenset(G))


def check(m: PMDP, u: Instantiation, spec: Specification,
          tol: float = DEFAULT_TOL):
    return Checker(m).check(u, spec, tol)


# -- exact brute-force oracle ----------------------------------------------

def _solve_rational(n: int, rows: dict[int, dict[int, Fraction]],
                    b: dict[int, Fraction]) -> dict[int, Fraction]:
    """Solve (I - P) x = b over the rationals by Gaussian elimination."""
    idx = sorted(rows)
    k = len(idx)
    pos = {s: i for i, s in enumerate(idx)}
    A = [[Fraction(0)] * (k + 1) for _ in range(k)]
    for s in idx:
        i = pos[s]
        A[i][i] += 1
        for d, p in rows[s].items():
            if d in pos:
                A[i][pos[d]] -= p
        A[i][k] = b.get(s, Fraction(0))
    for col in range(k):
        piv = next(r for r in range(col, k) if A[r][col] != 0)
        A[col], A[piv] = A[piv], A[col]
        inv = 1 / A[col][col]
        A[col] = [v * inv for v in A[col]]
        for r in range(k):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [v - f * w for v, w in zip(A[r], A[col])]
    return {s: A[pos[s]][k] for s in idx}


def _chain_value(mdp: ConcreteMDP, choice: tuple[int, ...],
                 spec_kind: str) -> Fraction | None:
    """Exact value at the initial state of the induced chain; None encodes
    an infinite expected cost."""
    n = mdp.num_states
    T = set(mdp.targets)
    succ = {s: mdp.transitions[(s, choice[s])] for s in range(n)}
    # states with a path to T in the chain
    pred: dict[int, set[int]] = {s: set() for s in range(n)}
    for s in range(n):
        for d, p in succ[s]:
            if p != 0:
                pred[d].add(s)
    can = set(T)
    stack = list(T)
    while stack:
        s = stack.pop()
        for p_ in pred[s]:
            if p_ not in can:
                can.add(p_)
                stack.append(p_)
    if spec_kind == "reach":
        q = can - T
        rows = {s: {d: p for d, p in succ[s] if d in q} for s in q}
        b = {s: sum((p for d, p in succ[s] if d in T), Fraction(0)) for s in q}
        sol = _solve_rational(n, rows, b)
        if mdp.initial in T:
            return Fraction(1)
        return sol.get(mdp.initial, Fraction(0))
    # expected cost: almost-sure reachability of T required from every state
    # reachable from the initial state
    reach_init = {mdp.initial}
    stack = [mdp.initial]
    while stack:
        s = stack.pop()
        for d, p in succ[s]:
            if p != 0 and d not in reach_init:
                reach_init.add(d)
                stack.append(d)
    if not reach_init <= can:
        return None
    q = reach_init - T
    rows = {s: {d: p for d, p in succ[s] if d in q} for s in q}
    b = {s: mdp.costs.get((s, choice[s]), Fraction(0)) if mdp.costs else Fraction(0)
         for s in q}
    sol = _solve_rational(n, rows, b)
    return sol.get(mdp.initial, Fraction(0))


def brute_force_oracle(mdp: ConcreteMDP, spec: Specification,
                       limit: int = 2 ** 20) -> Fraction:
    """Exact extremal value by enumerating all memoryless deterministic
    strategies and solving each induced chain in rational arithmetic."""
    counts = [len(acts) for acts in mdp.actions]
    total = 1
    for c in counts:
        total *= c
        if total > limit:
            raise InstanceTooLargeError(f"more than {limit} strategies")
    best = None
    maximize = spec.direction == "at-most"
    for choice in itertools.product(*(range(c) for c in counts)):
        val = _chain_value(mdp, choice, spec.kind)
        if val is None:       # infinite cost under this adversary
            if maximize:
                raise InstanceTooLargeError("infinite expected cost branch")
            continue
        if best is None or (maximize and val > best) or (not maximize and val < best):
            best = val
    if best is None:
        raise InstanceTooLargeError("no strategy with finite value")
    return best
