"""Lowering pipeline: symbolic NLP -> standard-form QCQP -> difference-of-
convex split -> convexified penalty program with in-place refresh.

Variable layout of the core vector x: one probability/cost variable per free
state (prob0/prob1 states are substituted away), followed by one variable per
model parameter. The convexified stage appends one penalty variable per
retained quadratic constraint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .graph import GraphAnalysis
from .model import AffineExpr, ModelError, PMDP, Specification
from .model import well_definedness_is_universal


class EncodingError(Exception):
    pass


@dataclass
class VariableSpace:
    names: list[str]
    lb: np.ndarray
    ub: np.ndarray
    pvar_of_state: dict[int, int]
    param_of: dict[str, int]

    @property
    def dim(self) -> int:
        return len(self.names)


@dataclass
class BellmanRow:
    state: int
    action: int
    # terms: (coefficient expression, free p-var index or None for a
    # substituted successor, substituted value when pvar is None)
    terms: list[tuple[AffineExpr, int | None, Fraction]]
    cost: Fraction


@dataclass
class NlpProblem:
    space: VariableSpace
    spec: Specification
    analysis: GraphAnalysis
    minimize: bool                 # False: mirrored (at-least) direction
    init_pvar: int | None          # None when the initial state is fixed
    init_fixed_value: float | None
    bellman: list[BellmanRow]
    eps_rows: list[AffineExpr]     # entries that must stay >= eps_graph
    eps_graph: float


@dataclass
class QuadConstraint:
    """x^T P x + q^T x + r <= 0 (slack slot added later for Bellman rows)."""
    P: list[tuple[int, int, float]]      # symmetric triplets, both cells
    q: dict[int, float]
    r: float
    label: str = ""

    def quad_value(self, x: np.ndarray) -> float:
        return float(sum(v * x[i] * x[j] for i, j, v in self.P))

    def value(self, x: np.ndarray) -> float:
        return self.quad_value(x) + sum(c * x[i] for i, c in self.q.items()) + self.r


@dataclass
class QcqpProblem:
    space: VariableSpace
    objective: dict[int, float]
    quad_constraints: list[QuadConstraint]   # one per Bellman inequality
    affine_constraints: list[QuadConstraint]  # P empty


@dataclass
class DcConstraint:
    base: QuadConstraint
    method: str                              # "bilinear" | "eigen"
    # bilinear: list of (y, z, c) encoding a quadratic part sum of 2c*y*z
    bilinear_terms: list[tuple[int, int, float]] = field(default_factory=list)
    # eigen: Gershgorin shift and the constraint's support variables
    shift: float = 0.0
    support: list[int] = field(default_factory=list)

    def convex_value(self, x: np.ndarray) -> float:
        if self.method == "bilinear":
            return float(sum(abs(c) * (x[y] + np.sign(c) * x[z]) ** 2
                             for y, z, c in self.bilinear_terms))
        t = self.shift
        return self.base.quad_value(x) + t * float(sum(x[j] ** 2 for j in self.support))

    def concave_value(self, x: np.ndarray) -> float:
        """Value of the (negative) concave part -g(x)."""
        if self.method == "bilinear":
            return -float(sum(abs(c) * (x[y] ** 2 + x[z] ** 2)
                              for y, z, c in self.bilinear_terms))
        return -self.shift * float(sum(x[j] ** 2 for j in self.support))

    def tangent_slots(self) -> list[tuple[int, float]]:
        """(variable, factor) pairs: linearizing -g at anchor contributes
        factor*anchor[var] to the var's linear coefficient and
        -(factor/2)*anchor[var]^2 to the constant."""
        slots: dict[int, float] = {}
        if self.method == "bilinear":
            for y, z, c in self.bilinear_terms:
                slots[y] = slots.get(y, 0.0) - 2 * abs(c)
                slots[z] = slots.get(z, 0.0) - 2 * abs(c)
        else:
            for j in self.support:
                slots[j] = slots.get(j, 0.0) - 2 * self.shift
        return sorted(slots.items())


@dataclass
class DcProblem:
    space: VariableSpace
    objective: dict[int, float]
    constraints: list[DcConstraint]
    affine_constraints: list[QuadConstraint]


@dataclass
class ConvexifiedProgram:
    """Solver-facing numeric buffers; `refresh` rewrites only the
    iteration-dependent tangent/penalty slots."""
    dc: DcProblem
    n: int                         # core vars + penalties
    n_core: int
    c: np.ndarray                  # objective
    lb: np.ndarray
    ub: np.ndarray
    # convex quadratic parts, fixed across iterations (COO per constraint)
    con_q: np.ndarray
    qi: np.ndarray
    qj: np.ndarray
    qv: np.ndarray
    # base linear parts and constants, fixed across iterations
    lin_con: np.ndarray
    lin_var: np.ndarray
    lin_val_base: np.ndarray
    r_base: np.ndarray
    # tangent slots (appended after the base linear triplets)
    tan_con: np.ndarray
    tan_var: np.ndarray
    tan_factor: np.ndarray
    lin_val: np.ndarray = None     # base + tangent values, refreshed
    r: np.ndarray = None
    m: int = 0                     # number of inequality constraints
    m_quad: int = 0
    anchor: np.ndarray = None
    tau: float = 0.0
    penalty_index: dict[int, int] = field(default_factory=dict)  # con -> var


def build_nlp(m: PMDP, spec: Specification, analysis: GraphAnalysis,
              eps_graph) -> NlpProblem:
    """Assemble the synthesis NLP, already simplified by the graph analysis:
    prob0/prob1 variables are substituted, unreachable states dropped, and
    well-definedness rows omitted when they hold over the whole box."""
    eps = Fraction(eps_graph)
    free = [s for s in sorted(analysis.reachable)
            if analysis.fixed_value(s, spec) is None]
    names = [f"p:{m.state_names[s]}" for s in free]
    pvar_of_state = {s: i for i, s in enumerate(free)}
    param_of = {}
    lb = [0.0] * len(free)
    ub = [1.0 if spec.kind == "reach" else np.inf] * len(free)
    box = dict(m.param_bounds)
    universal = well_definedness_is_universal(m, eps)
    eps_rows: list[AffineExpr] = []
    if not universal:
        for _, _, row in m.rows():
            for _, expr in row:
                if expr.is_constant:
                    if expr.constant < eps:
                        raise EncodingError(
                            f"constant transition entry {expr.constant} below eps_graph")
                    continue
                if len(expr.coefficients) == 1:
                    # single-parameter entry: fold c*v + b >= eps into the box
                    (name, c), = expr.coefficients
                    bound = (eps - expr.constant) / c
                    lo, hi = box[name]
                    if c > 0:
                        lo = max(lo, bound)
                    else:
                        hi = min(hi, bound)
                    if lo > hi:
                        raise EncodingError(f"empty feasible box for parameter {name}")
                    box[name] = (lo, hi)
                else:
                    eps_rows.append(expr)
    for p in m.params:
        param_of[p] = len(names)
        names.append(p)
        lo, hi = box[p]
        lb.append(float(lo))
        ub.append(float(hi))

    space = VariableSpace(names, np.array(lb), np.array(ub), pvar_of_state, param_of)
    minimize = spec.direction == "at-most"
    init_fixed = analysis.fixed_value(m.initial, spec)
    init_pvar = pvar_of_state.get(m.initial)

    rows: list[BellmanRow] = []
    for s in free:
        for a in range(len(m.actions[s])):
            terms = []
            for dest, expr in m.transitions[(s, a)]:
                fixed = analysis.fixed_value(dest, spec)
                if fixed is None:
                    terms.append((expr, pvar_of_state[dest], Fraction(0)))
                else:
                    terms.append((expr, None, Fraction(fixed)))
            cost = Fraction(0)
            if spec.kind == "cost" and m.costs:
                cost = m.costs.get((s, a), Fraction(0))
            rows.append(BellmanRow(s, a, terms, cost))
    return NlpProblem(space, spec, analysis, minimize, init_pvar,
                      init_fixed, rows, eps_rows, float(eps))


def nlp_to_qcqp(nlp: NlpProblem) -> QcqpProblem:
    """Standard-form lowering: the quadratic part of each Bellman row goes
    into a symmetric matrix with two a/2 cells per bilinear product, the
    affine part into q and r; affine rows pass through untouched."""
    space = nlp.space
    sign = 1.0 if nlp.minimize else -1.0
    objective = {}
    if nlp.init_pvar is not None:
        objective[nlp.init_pvar] = sign
    quads = []
    for row in nlp.bellman:
        P: dict[tuple[int, int], float] = {}
        q: dict[int, float] = {}
        r = float(row.cost)
        for expr, pvar, fixed in row.terms:
            if pvar is None:
                # substituted successor: affine in the parameters only
                f = float(fixed)
                if f != 0.0:
                    r += float(expr.constant) * f
                    for name, coef in expr.coefficients:
                        j = space.param_of[name]
                        q[j] = q.get(j, 0.0) + float(coef) * f
            else:
                if float(expr.constant) != 0.0:
                    q[pvar] = q.get(pvar, 0.0) + float(expr.constant)
                for name, coef in expr.coefficients:
                    j = space.param_of[name]
                    half = float(coef) / 2.0
                    P[(j, pvar)] = P.get((j, pvar), 0.0) + half
                    P[(pvar, j)] = P.get((pvar, j), 0.0) + half
        own = space.pvar_of_state[row.state]
        q[own] = q.get(own, 0.0) - 1.0
        if not nlp.minimize:
            # mirrored direction: p_s <= RHS becomes -(RHS) + p_s <= 0
            P = {k: -v for k, v in P.items()}
            q = {k: -v for k, v in q.items()}
            r = -r
        triplets = [(i, j, v) for (i, j), v in sorted(P.items()) if v != 0.0]
        quads.append(QuadConstraint(triplets, {k: v for k, v in q.items() if v != 0.0},
                                    r, label=f"bellman:{row.state}:{row.action}"))
    affine = []
    if nlp.init_pvar is not None:
        thr = float(nlp.spec.threshold)
        if nlp.minimize:
            affine.append(QuadConstraint([], {nlp.init_pvar: 1.0}, -thr,
                                         label="threshold"))
        else:
            affine.append(QuadConstraint([], {nlp.init_pvar: -1.0}, thr,
                                         label="threshold"))
    for expr in nlp.eps_rows:
        q = {space.param_of[name]: -float(c) for name, c in expr.coefficients}
        affine.append(QuadConstraint([], q, nlp.eps_graph - float(expr.constant),
                                     label="eps"))
    return QcqpProblem(space, objective, quads, affine)


def gershgorin_bound(P: list[tuple[int, int, float]]) -> float:
    """Max absolute row sum: a valid upper bound on the spectral radius."""
    rows: dict[int, float] = {}
    for i, _, v in P:
        rows[i] = rows.get(i, 0.0) + abs(v)
    return max(rows.values(), default=0.0)


def dc_split_eigen(qcqp: QcqpProblem) -> DcProblem:
    cons = []
    for base in qcqp.quad_constraints:
        support = sorted({i for i, _, _ in base.P} | {j for _, j, _ in base.P})
        t = gershgorin_bound(base.P)
        cons.append(DcConstraint(base, "eigen", shift=t, support=support))
    return DcProblem(qcqp.space, dict(qcqp.objective), cons,
                     list(qcqp.affine_constraints))


def dc_split_bilinear(qcqp: QcqpProblem) -> DcProblem:
    cons = []
    for base in qcqp.quad_constraints:
        terms = []
        for i, j, v in base.P:
            if i == j:
                raise EncodingError("unexpected square term in an affine pMDP encoding")
            if i < j:
                terms.append((i, j, v))   # cell value a/2 equals the c of 2c*y*z
        cons.append(DcConstraint(base, "bilinear", bilinear_terms=terms))
    return DcProblem(qcqp.space, dict(qcqp.objective), cons,
                     list(qcqp.affine_constraints))


def convexify(dc: DcProblem, anchor: np.ndarray, tau: float) -> ConvexifiedProgram:
    """Replace every concave part by its tangent at the anchor and add one
    penalty variable per quadratic constraint."""
    space = dc.space
    n_core = space.dim
    n = n_core + len(dc.constraints)
    names_pen = n_core
    c = np.zeros(n)
    lb = np.concatenate([space.lb, np.zeros(len(dc.constraints))])
    ub = np.concatenate([space.ub, np.full(len(dc.constraints), np.inf)])
    for i, v in dc.objective.items():
        c[i] = v
    c[n_core:] = tau

    con_q, qi, qj, qv = [], [], [], []
    lin_con, lin_var, lin_val = [], [], []
    r_base = []
    tan_con, tan_var, tan_factor = [], [], []
    penalty_index = {}
    for ci, con in enumerate(dc.constraints):
        base = con.base
        if con.method == "bilinear":
            # sum_t |c| (y + sgn(c) z)^2 expands to |c|y^2 + |c|z^2 + 2c y z
            for y, z, cc in con.bilinear_terms:
                ac = abs(cc)
                for a, b, v in ((y, y, ac), (z, z, ac), (y, z, cc), (z, y, cc)):
                    con_q.append(ci)
                    qi.append(a)
                    qj.append(b)
                    qv.append(v)
        else:
            for i, j, v in base.P:
                con_q.append(ci)
                qi.append(i)
                qj.append(j)
                qv.append(v)
            for j in con.support:
                con_q.append(ci)
                qi.append(j)
                qj.append(j)
                qv.append(con.shift)
        for i, v in base.q.items():
            lin_con.append(ci)
            lin_var.append(i)
            lin_val.append(v)
        pen = n_core + ci
        penalty_index[ci] = pen
        lin_con.append(ci)
        lin_var.append(pen)
        lin_val.append(-1.0)
        r_base.append(base.r)
        for var, factor in con.tangent_slots():
            tan_con.append(ci)
            tan_var.append(var)
            tan_factor.append(factor)
    m_quad = len(dc.constraints)
    for base in dc.affine_constraints:
        ci = len(r_base)
        for i, v in base.q.items():
            lin_con.append(ci)
            lin_var.append(i)
            lin_val.append(v)
        r_base.append(base.r)

    prog = ConvexifiedProgram(
        dc=dc, n=n, n_core=n_core, c=c, lb=lb, ub=ub,
        con_q=np.array(con_q, dtype=np.int64),
        qi=np.array(qi, dtype=np.int64),
        qj=np.array(qj, dtype=np.int64),
        qv=np.array(qv, dtype=np.float64),
        lin_con=np.array(lin_con, dtype=np.int64),
        lin_var=np.array(lin_var, dtype=np.int64),
        lin_val_base=np.array(lin_val, dtype=np.float64),
        r_base=np.array(r_base, dtype=np.float64),
        tan_con=np.array(tan_con, dtype=np.int64),
        tan_var=np.array(tan_var, dtype=np.int64),
        tan_factor=np.array(tan_factor, dtype=np.float64),
        m=len(r_base), m_quad=m_quad,
        penalty_index=penalty_index,
    )
    refresh(prog, anchor, tau)
    return prog


def refresh(prog: ConvexifiedProgram, anchor: np.ndarray, tau: float) -> None:
    """Rewrite only the iteration-dependent slots: tangent coefficients and
    the objective's penalty weight."""
    anchor = np.asarray(anchor, dtype=np.float64)
    if anchor.shape != (prog.n_core,):
        raise EncodingError(
            f"anchor dimension {anchor.shape} != core dimension {prog.n_core}")
    prog.anchor = anchor.copy()
    prog.tau = float(tau)
    prog.c[prog.n_core:] = prog.tau
    tan_val = prog.tan_factor * anchor[prog.tan_var]
    prog.lin_val = np.concatenate([prog.lin_val_base, tan_val])
    prog.r = prog.r_base.copy()
    if len(prog.tan_con):
        np.add.at(prog.r, prog.tan_con,
                  -0.5 * prog.tan_factor * anchor[prog.tan_var] ** 2)


def all_lin_con(prog: ConvexifiedProgram) -> np.ndarray:
    return np.concatenate([prog.lin_con, prog.tan_con])


def all_lin_var(prog: ConvexifiedProgram) -> np.ndarray:
    return np.concatenate([prog.lin_var, prog.tan_var])


def constraint_values(prog: ConvexifiedProgram, x: np.ndarray) -> np.ndarray:
    """f_i(x) for every inequality constraint (quadratic then affine)."""
    vals = prog.r.copy()
    if len(prog.con_q):
        np.add.at(vals, prog.con_q, prog.qv * x[prog.qi] * x[prog.qj])
    np.add.at(vals, all_lin_con(prog), prog.lin_val * x[all_lin_var(prog)])
    return vals


# -- QCQP dump format -------------------------------------------------------

def dump_qcqp(qcqp: QcqpProblem) -> str:
    lines = [f"vars {qcqp.space.dim}"]
    for i, name in enumerate(qcqp.space.names):
        lines.append(f"var {i} {name} {float(qcqp.space.lb[i])!r} "
                     f"{float(qcqp.space.ub[i])!r}")
    for i, v in sorted(qcqp.objective.items()):
        lines.append(f"obj {i} {v!r}")
    for kind, cons in (("quad", qcqp.quad_constraints),
                       ("affine", qcqp.affine_constraints)):
        for con in cons:
            lines.append(f"constraint {kind} {con.label}")
            for i, j, v in con.P:
                lines.append(f"P {i} {j} {v!r}")
            for i, v in sorted(con.q.items()):
                lines.append(f"q {i} {v!r}")
            lines.append(f"r {con.r!r}")
            lines.append("end")
    return "\n".join(lines) + "\n"


def load_qcqp_dump(text: str) -> QcqpProblem:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    it = iter(lines)
    header = next(it).split()
    dim = int(header[1])
    names = [""] * dim
    lb = np.zeros(dim)
    ub = np.zeros(dim)
    objective: dict[int, float] = {}
    quads: list[QuadConstraint] = []
    affine: list[QuadConstraint] = []
    current = None
    current_kind = None
    for ln in it:
        parts = ln.split()
        if parts[0] == "var":
            i = int(parts[1])
            names[i] = parts[2]
            lb[i] = float(parts[3])
            ub[i] = float(parts[4])
        elif parts[0] == "obj":
            objective[int(parts[1])] = float(parts[2])
        elif parts[0] == "constraint":
            current = QuadConstraint([], {}, 0.0,
                                     label=parts[2] if len(parts) > 2 else "")
            current_kind = parts[1]
        elif parts[0] == "P":
            current.P.append((int(parts[1]), int(parts[2]), float(parts[3])))
        elif parts[0] == "q":
            current.q[int(parts[1])] = float(parts[2])
        elif parts[0] == "r":
            current.r = float(parts[1])
        elif parts[0] == "end":
            (quads if current_kind == "quad" else affine).append(current)
            current = None
    space = VariableSpace(names, lb, ub, {}, {})
    return QcqpProblem(space, objective, quads, affine)
