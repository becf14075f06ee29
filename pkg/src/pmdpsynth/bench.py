"""Synthetic benchmark families (grid / maze / chain) and a random-model
generator for randomized testing. All emitted models are graph-preserving
over their parameter box, with row sums identically 1 by construction."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .model import AffineExpr, PMDP

DEFAULT_EPS = Fraction(1, 100_000)


def _box(params: list[str], eps: Fraction = DEFAULT_EPS):
    return {p: (eps, 1 - eps) for p in params}


def _pair(v: str):
    """(v, 1-v) as affine expressions."""
    return AffineExpr.var(v), AffineExpr.make(1, {v: -1})


def chain(n: int, nparams: int | None = None, seed: int = 0) -> PMDP:
    """Straight chain: cell i advances with one parameter, otherwise drops to
    a sink. Reach probability of the goal is the product of the used
    parameters."""
    if n < 1:
        raise ValueError("size must be >= 1")
    nparams = nparams or n
    params = [f"v{i}" for i in range(min(nparams, n))]
    names = [f"c{i}" for i in range(n)] + ["goal", "sink"]
    goal, sink = n, n + 1
    transitions = {}
    actions = []
    for i in range(n):
        v, w = _pair(params[i % len(params)])
        nxt = i + 1 if i + 1 < n else goal
        transitions[(i, 0)] = ((nxt, v), (sink, w))
        actions.append(("a",))
    transitions[(goal, 0)] = ((goal, AffineExpr.const(1)),)
    transitions[(sink, 0)] = ((sink, AffineExpr.const(1)),)
    actions += [("a",), ("a",)]
    return PMDP(tuple(names), 0, tuple(params), _box(params), tuple(actions),
                transitions, frozenset({goal}))


def grid(k: int, nparams: int = 8, seed: int = 0) -> PMDP:
    """k x k gridworld pMDP with two slip-prone move actions and a few
    absorbing trap cells; the far corner is the target."""
    if k < 2:
        raise ValueError("size must be >= 2")
    rng = np.random.default_rng(seed)
    params = [f"v{i}" for i in range(max(1, nparams))]
    idx = lambda i, j: i * k + j
    names = [f"x{i}_{j}" for i in range(k) for j in range(k)]
    target = idx(k - 1, k - 1)
    cells = [(i, j) for i in range(k) for j in range(k)]
    candidates = [c for c in cells if c not in ((0, 0), (k - 1, k - 1))]
    ntraps = max(1, k - 2)
    trap_cells = set()
    picks = rng.choice(len(candidates), size=min(ntraps, len(candidates)),
                       replace=False)
    for p in picks:
        trap_cells.add(candidates[int(p)])
    transitions = {}
    actions = []
    clamp = lambda i, j: idx(min(i, k - 1), min(j, k - 1))
    pi = 0
    for i, j in cells:
        s = idx(i, j)
        if (i, j) in trap_cells or s == target:
            transitions[(s, 0)] = ((s, AffineExpr.const(1)),)
            actions.append(("stay",))
            continue
        acts = []
        moves = [("east", (0, 1), (1, 0)), ("south", (1, 0), (0, 1))]
        for a, (aname, fwd, slip) in enumerate(moves):
            v, w = _pair(params[pi % len(params)])
            pi += 1
            d1 = clamp(i + fwd[0], j + fwd[1])
            d2 = clamp(i + slip[0], j + slip[1])
            if d1 == d2:
                transitions[(s, a)] = ((d1, AffineExpr.const(1)),)
            else:
                transitions[(s, a)] = ((d1, v), (d2, w))
            acts.append(aname)
        actions.append(tuple(acts))
    return PMDP(tuple(names), 0, tuple(params), _box(params), tuple(actions),
                transitions, frozenset({target}))


def maze(size: int, nparams: int | None = None, seed: int = 0) -> PMDP:
    """Layered maze: `size` junction cells arranged in at most 8 layers.
    Every cell offers two doors into the next layer (same column / shifted
    column); a door that fails drops into an absorbing pit. Door orientation
    (success probability v or 1-v) is randomized per door, so parameters are
    shared in conflicting orientations and the optimum sits in the interior
    of the box. The bounded depth keeps reachability values moderate even
    with thousands of cells."""
    if size < 1:
        raise ValueError("size must be >= 1")
    n = max(2, size)
    depth = min(8, n)
    width = -(-n // depth)
    nparams = min(nparams or n, 2 * n)
    params = [f"v{i}" for i in range(nparams)]
    rng = np.random.default_rng(seed)
    names = [f"m{i}" for i in range(n)] + ["goal", "pit"]
    goal, pit = n, n + 1
    transitions = {}
    actions = []
    pi = 0
    for i in range(n):
        layer, col = divmod(i, width)
        for a, shift in enumerate((0, 1)):
            d = (layer + 1) * width + (col + shift) % width
            if layer + 1 >= depth or d >= n:
                d = goal
            v, w = _pair(params[pi % nparams])
            pi += 1
            if rng.random() < 0.5:
                v, w = w, v
            transitions[(i, a)] = ((d, v), (pit, w))
        actions.append(("straight", "shift"))
    transitions[(goal, 0)] = ((goal, AffineExpr.const(1)),)
    transitions[(pit, 0)] = ((pit, AffineExpr.const(1)),)
    actions += [("stay",), ("stay",)]
    return PMDP(tuple(names), 0, tuple(params), _box(params), tuple(actions),
                transitions, frozenset({goal}))


def generate(family: str, size: int, nparams: int | None = None,
             seed: int = 0) -> PMDP:
    if family == "chain":
        return chain(size, nparams, seed)
    if family == "grid":
        return grid(size, nparams or 8, seed)
    if family == "maze":
        return maze(size, nparams, seed)
    raise ValueError(f"unknown family '{family}'")


def random_pmdp(rng: np.random.Generator, max_states: int = 8,
                max_actions: int = 2, nparams: int = 2,
                eps: Fraction = DEFAULT_EPS) -> PMDP:
    """Random affine pMDP that is universally well-defined over its box:
    each row starts from a rational base distribution and parameter
    coefficients are sized so entries stay positive on the whole box."""
    n = int(rng.integers(3, max_states + 1))
    params = [f"v{i}" for i in range(nparams)]
    names = [f"s{i}" for i in range(n)]
    ntargets = max(1, int(rng.integers(1, max(2, n // 3 + 1))))
    targets = set(int(t) for t in rng.choice(n, size=ntargets, replace=False))
    transitions = {}
    actions = []
    denom = 16
    for s in range(n):
        nacts = int(rng.integers(1, max_actions + 1))
        acts = tuple(f"a{a}" for a in range(nacts))
        actions.append(acts)
        for a in range(nacts):
            nsucc = int(rng.integers(1, min(4, n) + 1))
            succ = sorted(int(d) for d in rng.choice(n, size=nsucc, replace=False))
            weights = [Fraction(1 + int(rng.integers(0, denom)), 1) for _ in succ]
            total = sum(weights)
            base = [w / total for w in weights]
            exprs = [AffineExpr.const(b) for b in base]
            if len(succ) >= 2 and rng.random() < 0.8:
                i, j = rng.choice(len(succ), size=2, replace=False)
                i, j = int(i), int(j)
                p = params[int(rng.integers(0, nparams))]
                cmax = 2 * min(base[i], base[j])
                c = Fraction(int(rng.integers(1, denom)), denom) * cmax * Fraction(9, 10)
                if c > 0:
                    # entries base_i + c*(v - 1/2), base_j - c*(v - 1/2)
                    exprs[i] = exprs[i] + AffineExpr.make(-c / 2, {p: c})
                    exprs[j] = exprs[j] + AffineExpr.make(c / 2, {p: -c})
            transitions[(s, a)] = tuple(zip(succ, exprs))
    return PMDP(tuple(names), 0, tuple(params), _box(params, eps),
                tuple(actions), transitions, frozenset(targets))
