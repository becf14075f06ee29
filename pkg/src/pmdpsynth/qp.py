"""Self-contained solver for the convexified programs: a primal log-barrier
interior-point method over convex quadratic inequality constraints and
variable bounds.

The solver is reached through a narrow seam (`solve(prog, warm, tols) ->
SolveReport`), so an external convex-QP backend can be swapped in without
touching the synthesis driver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .encode import ConvexifiedProgram, all_lin_con, all_lin_var, constraint_values


@dataclass
class SolveTols:
    feas: float = 1e-8
    gap: float = 1e-8
    max_barrier_iters: int = 200
    mu: float = 20.0            # outer barrier multiplier
    newton_tol: float = 1e-10   # half squared Newton decrement


@dataclass
class SolveReport:
    status: str                 # optimal | max-iter | numerical-failure | infeasible
    assignment: np.ndarray
    objective: float
    iterations: int
    gap: float
    feas_residual: float
    notes: str = ""


class _Infeasible(Exception):
    pass


def _affine_rows(prog: ConvexifiedProgram):
    """Per affine constraint (past the quadratic block): {var: coef}, const."""
    rows: dict[int, dict[int, float]] = {}
    for ci, var, val in zip(prog.lin_con, prog.lin_var, prog.lin_val_base):
        if ci >= prog.m_quad:
            rows.setdefault(int(ci), {})[int(var)] = \
                rows.setdefault(int(ci), {}).get(int(var), 0.0) + float(val)
    return [(coefs, float(prog.r_base[ci])) for ci, coefs in sorted(rows.items())]


def _interior_start(prog: ConvexifiedProgram, warm: np.ndarray | None) -> np.ndarray:
    """Construct a strictly feasible point: fold single-variable affine rows
    into effective bounds, clip the warm start (or a midpoint) into their
    interior, repair any remaining multi-variable rows with a max-margin LP,
    then inflate the penalty variables until every quadratic constraint is
    strictly slack."""
    lb = prog.lb.copy()
    ub = prog.ub.copy()
    multi = []
    for coefs, r in _affine_rows(prog):
        if len(coefs) == 1:
            (var, a), = coefs.items()
            if a > 0:
                ub[var] = min(ub[var], -r / a)
            elif a < 0:
                lb[var] = max(lb[var], -r / a)
            elif r > 0:
                raise _Infeasible("constant affine row is violated")
        elif coefs:
            multi.append((coefs, r))
    if np.any(lb > ub):
        raise _Infeasible("empty feasible interval for a variable")

    n = prog.n
    x = np.empty(n)
    if warm is not None:
        x[:] = np.asarray(warm, dtype=np.float64)
    else:
        x[:] = np.where(np.isfinite(ub), (lb + ub) / 2.0, lb + 1.0)
    width = np.where(np.isfinite(ub), ub - lb, 1.0)
    margin = np.maximum(1e-9, np.minimum(1e-4, 0.25 * np.where(width > 0, width, 1.0)))
    x = np.maximum(x, lb + margin)
    x = np.minimum(x, np.where(np.isfinite(ub), ub - margin, x))

    if multi:
        worst = min(-(sum(a * x[v] for v, a in coefs.items()) + r)
                    for coefs, r in multi)
        if worst <= 1e-12:
            x = _affine_phase1(prog, x, multi, lb, ub)

    vals = constraint_values(prog, x)
    pen_vars = np.arange(prog.n_core, prog.n)
    if len(pen_vars):
        slack = 1e-3 if warm is not None else 1.0
        raw = vals[:prog.m_quad] + x[pen_vars]   # f_i with the -k_i removed
        x[pen_vars] = np.maximum(raw + slack, slack)
    return x


def _affine_phase1(prog: ConvexifiedProgram, x0: np.ndarray, multi,
                   lb: np.ndarray, ub: np.ndarray) -> np.ndarray:
    """Chebyshev-style LP over the core variables: maximize the joint margin
    of the multi-variable affine rows and the variable bounds."""
    from scipy.optimize import linprog

    n = prog.n_core
    rows = []
    rhs = []
    for coefs, r in multi:
        row = np.zeros(n + 1)
        for v, a in coefs.items():
            row[v] = a
        row[-1] = 1.0
        rows.append(row)
        rhs.append(-r)
    for i in range(n):
        if np.isfinite(lb[i]):
            row = np.zeros(n + 1)
            row[i] = -1.0
            row[-1] = 1.0
            rows.append(row)
            rhs.append(-lb[i])
        if np.isfinite(ub[i]):
            row = np.zeros(n + 1)
            row[i] = 1.0
            row[-1] = 1.0
            rows.append(row)
            rhs.append(ub[i])
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs),
                  bounds=[(None, None)] * (n + 1), method="highs")
    if not res.success or res.x[-1] <= 1e-12:
        raise _Infeasible("no strictly feasible point for the affine rows")
    out = x0.copy()
    out[:n] = res.x[:n]
    return out


def solve(prog: ConvexifiedProgram, warm: np.ndarray | None = None,
          tols: SolveTols | None = None) -> SolveReport:
    """Minimize c^T x over the strictly feasible region of `prog`."""
    tols = tols or SolveTols()
    # constraint scaling guard against wide coefficient ranges
    scale = np.ones(prog.m)
    if len(prog.con_q):
        np.maximum.at(scale, prog.con_q, np.abs(prog.qv))
    np.maximum.at(scale, all_lin_con(prog), np.abs(prog.lin_val))
    scale = np.maximum(scale, np.abs(prog.r))
    scale = np.maximum(scale, 1.0)

    lb, ub = prog.lb, prog.ub
    fin_lb = np.isfinite(lb)
    fin_ub = np.isfinite(ub)
    m_total = prog.m + int(fin_lb.sum()) + int(fin_ub.sum())

    try:
        x = _interior_start(prog, warm)
    except _Infeasible as exc:
        return SolveReport("infeasible", np.zeros(prog.n), np.inf, 0, np.inf,
                           np.inf, str(exc))

    lc = all_lin_con(prog)
    lv = all_lin_var(prog)

    def f_vals(x):
        return constraint_values(prog, x) / scale

    def jacobian(x):
        rows = np.concatenate([prog.con_q, prog.con_q, lc])
        cols = np.concatenate([prog.qi, prog.qj, lv])
        data = np.concatenate([prog.qv * x[prog.qj], prog.qv * x[prog.qi],
                               prog.lin_val])
        data = data / scale[rows]
        return sp.coo_matrix((data, (rows, cols)), shape=(prog.m, prog.n)).tocsr()

    def barrier(x, t_bar):
        f = f_vals(x)
        if np.any(f >= 0):
            return np.inf
        val = t_bar * float(prog.c @ x) - float(np.sum(np.log(-f)))
        dlo = x[fin_lb] - lb[fin_lb]
        dhi = ub[fin_ub] - x[fin_ub]
        if np.any(dlo <= 0) or np.any(dhi <= 0):
            return np.inf
        return val - float(np.sum(np.log(dlo))) - float(np.sum(np.log(dhi)))

    t_bar = 1.0 if warm is None else max(1.0, m_total / max(10 * tols.gap, 1e-4))
    if warm is not None:
        t_bar = min(t_bar, 1e4)
    total_newton = 0
    status = "optimal"
    # structural Hessian triplets of the quadratic parts (values scaled later)
    hq_rows = np.concatenate([prog.qi, prog.qj])
    hq_cols = np.concatenate([prog.qj, prog.qi])
    hq_con = np.concatenate([prog.con_q, prog.con_q])
    hq_vals = np.concatenate([prog.qv, prog.qv])

    while True:
        for _ in range(60):
            if total_newton >= tols.max_barrier_iters:
                status = "max-iter"
                break
            f = f_vals(x)
            w1 = -1.0 / f
            w2 = w1 * w1
            G = jacobian(x)
            grad = t_bar * prog.c + G.T @ w1
            diag = np.zeros(prog.n)
            dlo = np.where(fin_lb, x - lb, 1.0)
            dhi = np.where(fin_ub, ub - x, 1.0)
            grad = grad - fin_lb / dlo + fin_ub / dhi
            diag += fin_lb / dlo ** 2 + fin_ub / dhi ** 2
            H = (G.T @ sp.diags(w2) @ G).tolil()
            if len(hq_rows):
                Hq = sp.coo_matrix(
                    (hq_vals * (w1[hq_con] / scale[hq_con]), (hq_rows, hq_cols)),
                    shape=(prog.n, prog.n))
                H = (H.tocsr() + Hq.tocsr()).tolil()
            H = H.tocsr() + sp.diags(diag + 1e-12)
            try:
                dx = spla.spsolve(H.tocsc(), -grad)
            except Exception:
                dx = np.linalg.lstsq(H.toarray(), -grad, rcond=None)[0]
            if not np.all(np.isfinite(dx)):
                status = "numerical-failure"
                break
            decrement = float(-grad @ dx) / 2.0
            total_newton += 1
            if decrement <= tols.newton_tol:
                break
            # backtracking line search, staying strictly feasible
            base = barrier(x, t_bar)
            step = 1.0
            accepted = False
            for _ls in range(60):
                cand = x + step * dx
                val = barrier(cand, t_bar)
                if val < base - 0.01 * step * 2 * decrement + 1e-12 or \
                        (val < base and step < 1e-6):
                    x = cand
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break   # stalled; centering is as good as it gets
        if status != "optimal":
            break
        gap = m_total / t_bar
        if gap <= tols.gap:
            break
        t_bar *= tols.mu

    f = f_vals(x) * scale
    feas = float(max(0.0, np.max(f))) if len(f) else 0.0
    gap = m_total / t_bar
    if status == "optimal" and gap > tols.gap:
        status = "max-iter"
    return SolveReport(status, x, float(prog.c @ x), total_newton, gap, feas)
