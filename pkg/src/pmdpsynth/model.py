"""Core data model: affine parametric MDPs, instantiations, specifications.

All symbolic data (transition expressions, thresholds, box bounds) is kept in
exact rational arithmetic (`fractions.Fraction`); floating point only enters
in the numeric solver/model-checker buffers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

Rational = Fraction


class ModelError(Exception):
    """Raised for structurally invalid models or instantiations."""


class UnboundParameterError(ModelError):
    """An expression was evaluated with a parameter left unassigned."""


@dataclass(frozen=True)
class AffineExpr:
    """An affine function over parameters: constant + sum of coef_i * v_i.

    The coefficient map is canonical: it never stores zero coefficients, so
    equality of expressions is equality of the functions they denote.
    """

    constant: Fraction
    coefficients: tuple[tuple[str, Fraction], ...] = ()

    @staticmethod
    def make(constant, coefficients: Mapping[str, Fraction] | None = None) -> "AffineExpr":
        coeffs = []
        for name in sorted(coefficients or {}):
            c = Fraction(coefficients[name])
            if c != 0:
                coeffs.append((name, c))
        return AffineExpr(Fraction(constant), tuple(coeffs))

    @staticmethod
    def const(value) -> "AffineExpr":
        return AffineExpr.make(value)

    @staticmethod
    def var(name: str, coef=1) -> "AffineExpr":
        return AffineExpr.make(0, {name: Fraction(coef)})

    @property
    def is_constant(self) -> bool:
        return not self.coefficients

    def parameters(self) -> set[str]:
        return {name for name, _ in self.coefficients}

    def coefficient(self, name: str) -> Fraction:
        for n, c in self.coefficients:
            if n == name:
                return c
        return Fraction(0)

    def __add__(self, other: "AffineExpr") -> "AffineExpr":
        coeffs = dict(self.coefficients)
        for name, c in other.coefficients:
            coeffs[name] = coeffs.get(name, Fraction(0)) + c
        return AffineExpr.make(self.constant + other.constant, coeffs)

    def __neg__(self) -> "AffineExpr":
        return AffineExpr(-self.constant, tuple((n, -c) for n, c in self.coefficients))

    def __sub__(self, other: "AffineExpr") -> "AffineExpr":
        return self + (-other)

    def scale(self, factor) -> "AffineExpr":
        f = Fraction(factor)
        if f == 0:
            return AffineExpr.const(0)
        return AffineExpr(self.constant * f, tuple((n, c * f) for n, c in self.coefficients))

    def evaluate(self, u: Mapping[str, Fraction]) -> Fraction:
        total = self.constant
        for name, c in self.coefficients:
            if name not in u:
                raise UnboundParameterError(f"parameter '{name}' is not assigned")
            total += c * Fraction(u[name])
        return total

    def box_minimum(self, box: Mapping[str, tuple[Fraction, Fraction]]) -> Fraction:
        """Minimum over a parameter box, computed coordinate-wise."""
        total = self.constant
        for name, c in self.coefficients:
            if name not in box:
                raise UnboundParameterError(f"parameter '{name}' has no box bounds")
            lo, hi = box[name]
            total += min(c * lo, c * hi)
        return total

    def __str__(self) -> str:
        parts = []
        if self.constant != 0 or not self.coefficients:
            parts.append(str(self.constant))
        for name, c in self.coefficients:
            if c == 1:
                term = name
            elif c == -1:
                term = f"-{name}"
            else:
                term = f"{c}*{name}"
            if parts and not term.startswith("-"):
                parts.append(f"+ {term}")
            elif parts:
                parts.append(f"- {term[1:]}")
            else:
                parts.append(term)
        return " ".join(parts)


# An instantiation is simply a mapping parameter-id -> Fraction.
Instantiation = dict[str, Fraction]


@dataclass(frozen=True)
class Specification:
    """Reachability or expected-cost specification with a threshold."""

    kind: str          # "reach" | "cost"
    direction: str     # "at-most" | "at-least"
    threshold: Fraction

    def __post_init__(self):
        if self.kind not in ("reach", "cost"):
            raise ModelError(f"unknown specification kind '{self.kind}'")
        if self.direction not in ("at-most", "at-least"):
            raise ModelError(f"unknown direction '{self.direction}'")
        if self.kind == "reach" and not (0 <= self.threshold <= 1):
            raise ModelError(f"probability threshold {self.threshold} outside [0,1]")
        if self.kind == "cost" and self.threshold < 0:
            raise ModelError(f"cost threshold {self.threshold} is negative")

    def __str__(self) -> str:
        letter = "P" if self.kind == "reach" else "E"
        op = "<=" if self.direction == "at-most" else ">="
        t = self.threshold
        val = str(t) if t.denominator == 1 else f"{float(t)}"
        return f"{letter}{op}{val}"


@dataclass(frozen=True)
class PMDP:
    """Affine parametric MDP.

    states are indexed 0..n-1 with printable names; transitions map
    (state, action) to an ordered list of (successor, AffineExpr) with a
    symbolic row sum that is identically 1.
    """

    state_names: tuple[str, ...]
    initial: int
    params: tuple[str, ...]
    param_bounds: dict[str, tuple[Fraction, Fraction]]
    actions: tuple[tuple[str, ...], ...]                 # per-state action names
    transitions: dict[tuple[int, int], tuple[tuple[int, AffineExpr], ...]]
    targets: frozenset[int]
    costs: dict[tuple[int, int], Fraction] | None = None

    def __post_init__(self):
        n = len(self.state_names)
        if not (0 <= self.initial < n):
            raise ModelError("initial state out of range")
        for s in range(n):
            if not self.actions[s]:
                raise ModelError(f"state {self.state_names[s]} has no enabled action")
            for a in range(len(self.actions[s])):
                row = self.transitions.get((s, a))
                if not row:
                    raise ModelError(
                        f"missing transition row for ({self.state_names[s]}, {self.actions[s][a]})")
                total = AffineExpr.const(0)
                for dest, expr in row:
                    if not (0 <= dest < n):
                        raise ModelError("transition successor out of range")
                    total = total + expr
                if total != AffineExpr.const(1):
                    raise ModelError(
                        f"row ({self.state_names[s]}, {self.actions[s][a]}) sums to "
                        f"{total}, not 1")
                used = set()
                for dest, expr in row:
                    if dest in used:
                        raise ModelError("duplicate successor in transition row")
                    used.add(dest)
                    for p in expr.parameters():
                        if p not in self.param_bounds:
                            raise ModelError(f"undeclared parameter '{p}'")
        if self.costs:
            for (s, a), c in self.costs.items():
                if c < 0:
                    raise ModelError("negative cost")

    @property
    def num_states(self) -> int:
        return len(self.state_names)

    def state_index(self, name: str) -> int:
        return self.state_names.index(name)

    def rows(self) -> Iterable[tuple[int, int, tuple[tuple[int, AffineExpr], ...]]]:
        for s in range(self.num_states):
            for a in range(len(self.actions[s])):
                yield s, a, self.transitions[(s, a)]

    def successors(self, s: int, a: int) -> list[int]:
        return [dest for dest, _ in self.transitions[(s, a)]]

    def is_pmc(self) -> bool:
        return all(len(acts) == 1 for acts in self.actions)


@dataclass(frozen=True)
class ConcreteMDP:
    """A pMDP instantiated at a valuation: all entries exact rationals."""

    state_names: tuple[str, ...]
    initial: int
    actions: tuple[tuple[str, ...], ...]
    transitions: dict[tuple[int, int], tuple[tuple[int, Fraction], ...]]
    targets: frozenset[int]
    costs: dict[tuple[int, int], Fraction] | None = None

    @property
    def num_states(self) -> int:
        return len(self.state_names)


@dataclass(frozen=True)
class WellDefinedVerdict:
    ok: bool
    violations: tuple[str, ...] = ()


def evaluate_affine(expr: AffineExpr, u: Mapping[str, Fraction]) -> Fraction:
    return expr.evaluate(u)


def instantiate(m: PMDP, u: Instantiation) -> ConcreteMDP:
    """Replace every affine entry by its exact rational value at u."""
    missing = set(m.params) - set(u)
    if missing:
        raise UnboundParameterError(f"instantiation misses parameters {sorted(missing)}")
    trans = {}
    for s, a, row in m.rows():
        trans[(s, a)] = tuple((dest, expr.evaluate(u)) for dest, expr in row)
    return ConcreteMDP(m.state_names, m.initial, m.actions, trans, m.targets,
                       dict(m.costs) if m.costs else None)


def check_well_defined(m: PMDP, u: Instantiation, eps_graph: Fraction) -> WellDefinedVerdict:
    """Verdict whether u yields a graph-preserving MDP: every instantiated
    entry >= eps_graph and every row sums to 1 exactly."""
    eps = Fraction(eps_graph)
    if eps <= 0:
        raise ModelError("eps_graph must be positive")
    violations = []
    for s, a, row in m.rows():
        total = Fraction(0)
        for dest, expr in row:
            val = expr.evaluate(u)
            total += val
            if val < eps:
                violations.append(
                    f"P({m.state_names[s]},{m.actions[s][a]},{m.state_names[dest]})"
                    f" = {val} < {eps}")
        if total != 1:
            violations.append(
                f"row ({m.state_names[s]},{m.actions[s][a]}) sums to {total}")
    for p in m.params:
        lo, hi = m.param_bounds[p]
        val = Fraction(u[p])
        if not (lo <= val <= hi):
            violations.append(f"parameter {p} = {val} outside [{lo},{hi}]")
    return WellDefinedVerdict(not violations, tuple(violations))


def well_definedness_is_universal(m: PMDP, eps_graph: Fraction) -> bool:
    """True iff every instantiation inside the parameter box is well-defined,
    decided by the coordinate-wise box minimum of every affine entry."""
    eps = Fraction(eps_graph)
    for p in m.params:
        lo, hi = m.param_bounds[p]
        if lo is None or hi is None:
            raise ModelError(f"parameter {p} has an unbounded box")
    for _, _, row in m.rows():
        for _, expr in row:
            if expr.box_minimum(m.param_bounds) < eps:
                return False
    return True
