"""Particle-swarm baseline over the parameter box with repeated model
checking (matrix updated in place per valuation, never rebuilt)."""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .ccp import SynthesisResult, _certify, CcpConfig
from .graph import InfeasibleCostError, analyze
from .mc import Checker, HOLDS_SLACK
from .model import PMDP, Specification, well_definedness_is_universal


class NotSupportedError(Exception):
    """The well-defined parameter region is not the full hyper-rectangle."""


@dataclass
class PsoConfig:
    particles: int = 40
    inertia: float = 0.7298
    cognitive: float = 1.49618
    social: float = 1.49618
    max_iters: int = 500
    seed: int = 0
    eps_graph: Fraction = Fraction(1, 100_000)
    mc_tol: float = 1e-8

    def __post_init__(self):
        if self.particles < 2:
            raise ValueError("need at least 2 particles")
        if min(self.inertia, self.cognitive, self.social) <= 0:
            raise ValueError("PSO coefficients must be positive")


def _reflect(pos: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Reflect positions at the box walls (avoids corner pile-up)."""
    width = hi - lo
    out = pos.copy()
    for _ in range(10):
        below = out < lo
        above = out > hi
        if not (below.any() or above.any()):
            break
        out = np.where(below, 2 * lo - out, out)
        out = np.where(above, 2 * hi - out, out)
    return np.clip(out, lo, hi)


def synthesize_pso(m: PMDP, spec: Specification,
                   cfg: PsoConfig | None = None) -> SynthesisResult:
    cfg = cfg or PsoConfig()
    t_start = time.perf_counter()
    if not well_definedness_is_universal(m, cfg.eps_graph):
        raise NotSupportedError(
            "PSO requires every instantiation in the parameter box to be "
            "well-defined (hyper-rectangular region)")
    try:
        analyze(m, spec)
    except InfeasibleCostError:
        return SynthesisResult("infeasible-instance", None, None, 0, 0, 0.0,
                               time.perf_counter() - t_start, method="pso")
    rng = np.random.default_rng(cfg.seed)
    nv = len(m.params)
    lo = np.array([float(m.param_bounds[p][0]) for p in m.params])
    hi = np.array([float(m.param_bounds[p][1]) for p in m.params])
    checker = Checker(m)
    opt = "max" if spec.direction == "at-most" else "min"
    minimize = spec.direction == "at-most"     # lower worst-case value is better
    thr = float(spec.threshold)

    def fitness(v: np.ndarray) -> float:
        checker.set_valuation(v)
        if spec.kind == "reach":
            res = checker.reach_values(opt, cfg.mc_tol)
        else:
            res = checker.cost_values(opt, cfg.mc_tol)
        return float(res.values[m.initial])

    pos = lo + rng.uniform(size=(cfg.particles, nv)) * (hi - lo)
    vel = rng.uniform(-1, 1, size=(cfg.particles, nv)) * (hi - lo) * 0.1
    pbest = pos.copy()
    pbest_val = np.array([fitness(pos[i]) for i in range(cfg.particles)])
    order = np.argsort(pbest_val if minimize else -pbest_val, kind="stable")
    gbest_idx = int(order[0])
    gbest = pbest[gbest_idx].copy()
    gbest_val = float(pbest_val[gbest_idx])
    iterations = 0

    def feasible(val: float) -> bool:
        return val <= thr + HOLDS_SLACK if minimize else val >= thr - HOLDS_SLACK

    ccp_like = CcpConfig(eps_graph=cfg.eps_graph, mc_tol=cfg.mc_tol)

    def finish(v: np.ndarray):
        u = {p: float(v[j]) for j, p in enumerate(m.params)}
        ok, value = _certify(m, checker, u, spec, ccp_like)
        if ok:
            return SynthesisResult("feasible", u, value, iterations, 0, 0.0,
                                   time.perf_counter() - t_start, method="pso")
        return None

    if feasible(gbest_val):
        res = finish(gbest)
        if res:
            return res

    for it in range(cfg.max_iters):
        iterations = it + 1
        r1 = rng.uniform(size=(cfg.particles, nv))
        r2 = rng.uniform(size=(cfg.particles, nv))
        vel = (cfg.inertia * vel
               + cfg.cognitive * r1 * (pbest - pos)
               + cfg.social * r2 * (gbest - pos))
        pos = _reflect(pos + vel, lo, hi)
        for i in range(cfg.particles):
            val = fitness(pos[i])
            better = val < pbest_val[i] if minimize else val > pbest_val[i]
            if better:
                pbest[i] = pos[i]
                pbest_val[i] = val
            gbetter = val < gbest_val if minimize else val > gbest_val
            if gbetter:
                gbest = pos[i].copy()
                gbest_val = val
                if feasible(val):
                    res = finish(gbest)
                    if res:
                        return res
    if feasible(gbest_val):
        res = finish(gbest)
        if res:
            return res
    return SynthesisResult("exhausted",
                           {p: float(gbest[j]) for j, p in enumerate(m.params)},
                           gbest_val, iterations, 0, 0.0,
                           time.perf_counter() - t_start, method="pso")


def estimate_optimum(m: PMDP, spec: Specification,
                     cfg: PsoConfig | None = None) -> float:
    """Best worst-case value found by a plain PSO sweep (no threshold test);
    used to place satisfiable thresholds in experiments."""
    cfg = cfg or PsoConfig(max_iters=60)
    # probe threshold at the extreme end so the sweep (almost) never stops early
    if spec.kind == "reach":
        probe_thr = Fraction(0) if spec.direction == "at-most" else Fraction(1)
    else:
        probe_thr = Fraction(0) if spec.direction == "at-most" else Fraction(10**9)
    res = synthesize_pso(m, Specification(spec.kind, spec.direction, probe_thr), cfg)
    return float(res.value)
