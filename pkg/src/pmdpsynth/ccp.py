"""Penalty convex-concave synthesis driver with model checking in the loop.

Each iteration: refresh the convexified program at the current anchor and
penalty weight, solve it (warm-started), model-check the extracted parameter
valuation for early termination, feed the model-checking values back into
the next anchor, and grow the penalty weight additively.
"""

from __future__ import annotations

import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import encode, qp
from .graph import GraphAnalysis, InfeasibleCostError, analyze
from .mc import Checker, HOLDS_SLACK
from .model import Instantiation, PMDP, Specification, check_well_defined


@dataclass
class CcpConfig:
    tau0: float | None = None       # default 0.05 reachability / 5 expected cost
    tau_max: float = 1e4
    eps_graph: Fraction = Fraction(1, 100_000)
    max_iters: int = 100
    penalty_zero_tol: float = 1e-8
    restarts: int = 3
    split: str = "bilinear"         # "bilinear" | "eigen"
    mc_tol: float = 1e-8
    # model checking inside the loop: fast per-iteration checks drive early
    # termination and feed the next anchor; disabled, the procedure is the
    # plain penalty CCP that only exits through the penalty-zero path
    mc_feedback: bool = True
    tau_schedule: str = "additive"  # "additive" | "multiplicative"
    seed: int = 0
    solver: object = None           # backend seam; defaults to qp.solve
    progress: object = None         # optional stream for per-iteration lines
    incremental: bool = True        # refresh + warm start (off: rebuild + cold)

    def tau_start(self, spec: Specification) -> float:
        if self.tau0 is not None:
            return self.tau0
        return 0.05 if spec.kind == "reach" else 5.0


@dataclass
class SynthesisResult:
    status: str                       # feasible | exhausted | infeasible-instance
    instantiation: dict[str, float] | None
    value: float | None               # certified model-checked value
    iterations: int
    restarts: int
    solver_time: float
    total_time: float
    method: str = "ccp"
    encode_time: float = 0.0


def initial_anchor(m: PMDP, spec: Specification, nlp: encode.NlpProblem,
                   rng: np.random.Generator | None = None,
                   previous: np.ndarray | None = None) -> np.ndarray:
    """Parameters at the box center, probability variables at the threshold;
    restarts perturb the previous anchor by 25% of the box width."""
    space = nlp.space
    anchor = np.zeros(space.dim)
    thr = float(spec.threshold)
    for i in range(len(space.pvar_of_state)):
        anchor[i] = thr
    for name, j in space.param_of.items():
        lo, hi = float(space.lb[j]), float(space.ub[j])
        anchor[j] = (lo + hi) / 2.0
    if previous is not None and rng is not None:
        anchor = previous.copy()
        for name, j in space.param_of.items():
            lo, hi = float(space.lb[j]), float(space.ub[j])
            radius = 0.25 * (hi - lo)
            anchor[j] = float(np.clip(anchor[j] + rng.uniform(-radius, radius), lo, hi))
    return anchor


def _extract_valuation(nlp: encode.NlpProblem, x: np.ndarray) -> dict[str, float]:
    space = nlp.space
    out = {}
    for name, j in space.param_of.items():
        out[name] = float(np.clip(x[j], space.lb[j], space.ub[j]))
    return out


def _certify(m: PMDP, checker: Checker, u: dict[str, float],
             spec: Specification, cfg: CcpConfig):
    """Exact-path certification: well-definedness plus a direct-solve model
    check against the threshold."""
    u_rat = {k: Fraction(v) for k, v in u.items()}
    verdict = check_well_defined(m, u_rat, cfg.eps_graph)
    if not verdict.ok:
        return False, None
    holds, value = checker.check(u, spec, tol=cfg.mc_tol, certified=True)
    return holds, value


def synthesize(m: PMDP, spec: Specification, cfg: CcpConfig | None = None) -> SynthesisResult:
    cfg = cfg or CcpConfig()
    t_start = time.perf_counter()
    solver = cfg.solver or qp.solve
    rng = np.random.default_rng(cfg.seed)
    try:
        analysis = analyze(m, spec)
    except InfeasibleCostError:
        return SynthesisResult("infeasible-instance", None, None, 0, 0, 0.0,
                               time.perf_counter() - t_start)
    checker = Checker(m)
    nlp = encode.build_nlp(m, spec, analysis, cfg.eps_graph)

    if nlp.init_pvar is None:
        # the initial state's value is fixed by the graph alone
        value = nlp.init_fixed_value
        thr = float(spec.threshold)
        ok = value <= thr + HOLDS_SLACK if spec.direction == "at-most" \
            else value >= thr - HOLDS_SLACK
        u0 = {p: float((m.param_bounds[p][0] + m.param_bounds[p][1]) / 2)
              for p in m.params}
        status = "feasible" if ok else "infeasible-instance"
        return SynthesisResult(status, u0 if ok else None, value if ok else None,
                               0, 0, 0.0, time.perf_counter() - t_start)

    qcqp = encode.nlp_to_qcqp(nlp)
    split = encode.dc_split_bilinear if cfg.split == "bilinear" else encode.dc_split_eigen
    dc = split(qcqp)

    solver_time = 0.0
    encode_time = 0.0
    iterations = 0
    previous_anchor = None
    prog = None
    for restart in range(cfg.restarts + 1):
        anchor = initial_anchor(m, spec, nlp, rng if restart else None,
                                previous_anchor if restart else None)
        tau = cfg.tau_start(spec)
        t0 = time.perf_counter()
        if prog is None or not cfg.incremental:
            prog = encode.convexify(dc, anchor, tau)
        else:
            encode.refresh(prog, anchor, tau)
        encode_time += time.perf_counter() - t0
        warm = None
        for it in range(cfg.max_iters):
            iterations += 1
            t0 = time.perf_counter()
            report = solver(prog, warm=warm if cfg.incremental else None)
            solver_time += time.perf_counter() - t0
            if report.status in ("numerical-failure", "infeasible"):
                break
            x = report.assignment
            penalty_sum = float(np.sum(x[prog.n_core:]))
            u = _extract_valuation(nlp, x)
            fast = None
            fast_holds = False
            if cfg.mc_feedback:
                # model checking in the loop: fast value iteration at the
                # extracted valuation, both for early termination and for
                # the next anchor
                checker.set_valuation(u)
                opt = "max" if spec.direction == "at-most" else "min"
                if spec.kind == "reach":
                    fast = checker.reach_values(opt, cfg.mc_tol)
                else:
                    fast = checker.cost_values(opt, cfg.mc_tol)
                mc_value = float(fast.values[m.initial])
                thr = float(spec.threshold)
                fast_holds = mc_value <= thr + HOLDS_SLACK \
                    if spec.direction == "at-most" \
                    else mc_value >= thr - HOLDS_SLACK
            if cfg.progress:
                shown = mc_value if fast is not None else float("nan")
                print(f"iter={iterations} tau={tau:.6g} penalty={penalty_sum:.6g} "
                      f"value={shown:.10g}", file=cfg.progress)
            if fast_holds or penalty_sum <= cfg.penalty_zero_tol:
                ok, value = _certify(m, checker, u, spec, cfg)
                if ok:
                    return SynthesisResult(
                        "feasible", u, value, iterations, restart, solver_time,
                        time.perf_counter() - t_start,
                        encode_time=encode_time)
                # spurious candidate: keep iterating
            new_anchor = x[:prog.n_core].copy()
            if fast is not None:
                for s, i in nlp.space.pvar_of_state.items():
                    new_anchor[i] = float(np.clip(fast.values[s],
                                                  prog.lb[i],
                                                  min(prog.ub[i], 1e12)))
            free_idx = np.arange(len(nlp.space.pvar_of_state))
            mu = float(np.max(new_anchor[free_idx])) if len(free_idx) else 1.0
            mu = max(mu, 1e-3)
            if cfg.tau_schedule == "additive":
                tau = min(tau + mu, cfg.tau_max)
            else:
                tau = min(tau * max(mu, 1.5), cfg.tau_max)
            t0 = time.perf_counter()
            if cfg.incremental:
                encode.refresh(prog, new_anchor, tau)
            else:
                prog = encode.convexify(dc, new_anchor, tau)
            encode_time += time.perf_counter() - t0
            warm = x.copy()
        previous_anchor = prog.anchor
    return SynthesisResult("exhausted", None, None, iterations, cfg.restarts,
                           solver_time, time.perf_counter() - t_start,
                           encode_time=encode_time)
