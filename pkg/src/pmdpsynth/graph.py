"""Parameter-independent graph preprocessing.

For graph-preserving models the support of every transition row is fixed, so
probability-0/1 state sets can be computed once on the underlying graph and
their variables eliminated from the downstream encoding.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import PMDP, Specification


class InfeasibleCostError(Exception):
    """Expected-cost query where the goal is not reached almost surely."""


@dataclass(frozen=True)
class GraphAnalysis:
    prob0: frozenset[int]
    prob1: frozenset[int]
    reachable: frozenset[int]

    def fixed_value(self, s: int, spec: Specification) -> float | None:
        if spec.kind == "reach":
            if s in self.prob0:
                return 0.0
            if s in self.prob1:
                return 1.0
        else:
            if s in self.prob1:   # goal states carry zero remaining cost
                return 0.0
        return None


def _forward_reachable(m: PMDP, start: int) -> set[int]:
    seen = {start}
    stack = [start]
    while stack:
        s = stack.pop()
        for a in range(len(m.actions[s])):
            for d in m.successors(s, a):
                if d not in seen:
                    seen.add(d)
                    stack.append(d)
    return seen


def _backward_reach(m: PMDP, targets: set[int]) -> set[int]:
    """States with some graph path into `targets` (any actions)."""
    pred: dict[int, set[int]] = {s: set() for s in range(m.num_states)}
    for s, a, row in m.rows():
        for d, _ in row:
            pred[d].add(s)
    seen = set(targets)
    stack = list(targets)
    while stack:
        s = stack.pop()
        for p in pred[s]:
            if p not in seen:
                seen.add(p)
                stack.append(p)
    return seen


def _exist_safe(m: PMDP, avoid: set[int]) -> set[int]:
    """States from which some strategy surely avoids `avoid` forever:
    greatest fixed point of X = {s not in avoid | some action keeps all
    successors in X}."""
    x = set(range(m.num_states)) - set(avoid)
    changed = True
    while changed:
        changed = False
        for s in sorted(x):
            ok = False
            for a in range(len(m.actions[s])):
                if all(d in x for d in m.successors(s, a)):
                    ok = True
                    break
            if not ok:
                x.discard(s)
                changed = True
    return x


def prob1_universal(m: PMDP, targets: set[int]) -> set[int]:
    """States reaching `targets` with probability 1 under *every* strategy.

    Complement: states from which some strategy admits a positive-probability
    run that never touches the targets, i.e. states that can reach (within
    the non-target sub-MDP) a region where some strategy stays forever.
    """
    non_target = set(range(m.num_states)) - set(targets)
    # Controllable-safety core inside the non-target region.
    core = _exist_safe(m, set(targets))
    if not core:
        return set(range(m.num_states))
    # States in non_target that can reach the core via a path through
    # non_target states (a single positive-probability branch suffices).
    pred: dict[int, set[int]] = {s: set() for s in range(m.num_states)}
    for s, a, row in m.rows():
        if s in non_target:
            for d, _ in row:
                pred[d].add(s)
    bad = set(core)
    stack = list(core)
    while stack:
        s = stack.pop()
        for p in pred[s]:
            if p in non_target and p not in bad:
                bad.add(p)
                stack.append(p)
    return set(range(m.num_states)) - bad


def analyze(m: PMDP, spec: Specification) -> GraphAnalysis:
    """Compute prob0/prob1 sets for the optimizing direction of `spec`.

    For reachability: prob1 is the universal (all-strategies) almost-sure
    set, which is sound whether the adversary maximizes or minimizes. prob0
    is direction dependent: under a maximizing adversary a state has value 0
    iff it has no path to the targets; under a minimizing one iff some
    strategy surely avoids them.
    """
    reachable = frozenset(_forward_reachable(m, m.initial))
    targets = set(m.targets)
    if spec.kind == "reach":
        if not targets:
            raise InfeasibleCostError("reachability specification with empty target set")
        can_reach = _backward_reach(m, targets)
        if spec.direction == "at-most":
            prob0 = set(range(m.num_states)) - can_reach
        else:
            prob0 = _exist_safe(m, targets) - targets
        prob1 = prob1_universal(m, targets)
        return GraphAnalysis(frozenset(prob0 - prob1), frozenset(prob1), reachable)
    # Expected cost: the goal must be reached almost surely under all
    # strategies from every reachable state, otherwise the cost diverges.
    p1 = prob1_universal(m, targets)
    missing = set(reachable) - p1
    if missing:
        names = ", ".join(m.state_names[s] for s in sorted(missing)[:5])
        raise InfeasibleCostError(
            f"goal not reached almost surely from reachable states ({names})")
    return GraphAnalysis(frozenset(), frozenset(targets), reachable)
