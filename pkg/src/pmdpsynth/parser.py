"""Text formats: model files, specification strings, valuation files.

Model format (line oriented, '#' starts a comment):

    @type pmdp|pmc
    @parameters <id> [lo,hi] <id> [lo,hi] ...
    @states <state> ...                         # optional explicit ordering
    @initial <state>
    @targets <state> ...
    <state> <action> <state'> <affine-expr>     # transition rows
    @costs                                      # optional trailing section
    <state> <action> <rational>

pMC files may omit the action id in transition and cost lines (one implicit
action per state). Rationals are `a/b`, integers, or decimal/scientific
literals, all converted exactly.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .model import AffineExpr, Instantiation, ModelError, PMDP, Specification


class ParseError(Exception):
    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        loc = ""
        if line is not None:
            loc = f"line {line}"
            if col is not None:
                loc += f", col {col}"
            loc += ": "
        super().__init__(loc + message)
        self.line = line
        self.col = col


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+/\d+|\d+\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?|\.\d+)"
                    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_.\-]*)"
                    r"|(?P<op>[+\-*]))")


def parse_rational(text: str, line: int | None = None) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"invalid rational '{text}'", line)


def parse_affine(text: str, line: int | None = None) -> AffineExpr:
    """Parse `term (('+'|'-') term)*` with term := rational | rational '*' ident | ident."""
    pos = 0
    tokens = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise ParseError(f"unexpected character '{text[pos:].strip()[0]}' in expression",
                                 line, pos + 1)
            break
        tokens.append((m.lastgroup, m.group(m.lastgroup)))
        pos = m.end()
    if not tokens:
        raise ParseError("empty expression", line)

    expr = AffineExpr.const(0)
    i = 0
    sign = Fraction(1)
    first = True
    while i < len(tokens):
        kind, val = tokens[i]
        if not first or kind == "op":
            if kind != "op" or val not in "+-":
                if first and kind != "op":
                    pass
                else:
                    raise ParseError(f"expected '+' or '-', got '{val}'", line)
            if kind == "op":
                sign = Fraction(1) if val == "+" else Fraction(-1)
                i += 1
                if i >= len(tokens):
                    raise ParseError("dangling operator in expression", line)
                kind, val = tokens[i]
        first = False
        if kind == "num":
            coef = sign * parse_rational(val, line)
            if i + 1 < len(tokens) and tokens[i + 1] == ("op", "*"):
                if i + 2 >= len(tokens) or tokens[i + 2][0] != "ident":
                    raise ParseError("expected parameter name after '*'", line)
                expr = expr + AffineExpr.var(tokens[i + 2][1], coef)
                i += 3
            else:
                expr = expr + AffineExpr.const(coef)
                i += 1
        elif kind == "ident":
            expr = expr + AffineExpr.var(val, sign)
            i += 1
        else:
            raise ParseError(f"unexpected '{val}' in expression", line)
        sign = Fraction(1)
    return expr


def parse_model(text: str) -> PMDP:
    model_type = None
    params: list[str] = []
    bounds: dict[str, tuple[Fraction, Fraction]] = {}
    initial_name = None
    target_names: list[str] = []
    state_order: list[str] = []
    state_ids: dict[str, int] = {}
    trans_lines: list[tuple[int, list[str]]] = []
    cost_lines: list[tuple[int, list[str]]] = []
    in_costs = False

    def intern(name: str) -> int:
        if name not in state_ids:
            state_ids[name] = len(state_order)
            state_order.append(name)
        return state_ids[name]

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if stripped.startswith("@"):
            fields = stripped.split()
            directive = fields[0]
            if directive == "@type":
                if model_type is not None:
                    raise ParseError("duplicate @type", lineno)
                if len(fields) != 2 or fields[1] not in ("pmdp", "pmc"):
                    raise ParseError("@type expects 'pmdp' or 'pmc'", lineno)
                model_type = fields[1]
            elif directive == "@parameters":
                body = stripped[len("@parameters"):]
                for m in re.finditer(r"([A-Za-z_][A-Za-z0-9_.\-]*)\s*\[([^\]]*)\]", body):
                    name = m.group(1)
                    if name in bounds:
                        raise ParseError(f"duplicate parameter '{name}'", lineno)
                    parts = m.group(2).split(",")
                    if len(parts) != 2:
                        raise ParseError("parameter bounds must be [lo,hi]", lineno)
                    lo = parse_rational(parts[0].strip(), lineno)
                    hi = parse_rational(parts[1].strip(), lineno)
                    if lo > hi:
                        raise ParseError(f"empty bound interval for '{name}'", lineno)
                    params.append(name)
                    bounds[name] = (lo, hi)
                leftover = re.sub(r"([A-Za-z_][A-Za-z0-9_.\-]*)\s*\[([^\]]*)\]", "", body).strip()
                if leftover:
                    raise ParseError(f"malformed @parameters entry near '{leftover}'", lineno)
            elif directive == "@initial":
                if initial_name is not None:
                    raise ParseError("duplicate @initial", lineno)
                if len(fields) != 2:
                    raise ParseError("@initial expects one state", lineno)
                initial_name = fields[1]
            elif directive == "@states":
                for name in fields[1:]:
                    intern(name)
            elif directive == "@targets":
                target_names.extend(fields[1:])
            elif directive == "@costs":
                in_costs = True
            else:
                raise ParseError(f"unknown directive '{directive}'", lineno)
            continue
        fields = stripped.split(None, 3 if not in_costs else 2)
        if in_costs:
            cost_lines.append((lineno, stripped.split()))
        else:
            trans_lines.append((lineno, fields))

    if model_type is None:
        raise ParseError("missing @type directive")
    if initial_name is None:
        raise ParseError("missing @initial directive")
    pmc = model_type == "pmc"

    # Transition rows: group by (state, action).
    rows: dict[tuple[int, str], list[tuple[int, AffineExpr]]] = {}
    action_order: dict[int, list[str]] = {}
    for lineno, fields in trans_lines:
        if pmc and len(fields) >= 3:
            # allow explicit action too; detect by field count
            if len(fields) == 3:
                sname, dname, expr_text = fields
                aname = "a"
            else:
                sname, aname, dname, expr_text = fields
        elif len(fields) == 4:
            sname, aname, dname, expr_text = fields
        else:
            raise ParseError("transition line needs <state> <action> <state'> <expr>"
                             + (" (action optional for pmc)" if pmc else ""), lineno)
        s = intern(sname)
        d = intern(dname)
        expr = parse_affine(expr_text, lineno)
        key = (s, aname)
        if key not in rows:
            rows[key] = []
            action_order.setdefault(s, [])
            if aname in action_order[s]:
                raise ParseError("action rows must be contiguous", lineno)
            action_order[s].append(aname)
        if any(dest == d for dest, _ in rows[key]):
            raise ParseError(f"duplicate transition ({sname},{aname},{dname})", lineno)
        rows[key].append((d, expr))
        for p in expr.parameters():
            if p not in bounds:
                raise ParseError(f"undeclared parameter '{p}'", lineno)

    n = len(state_order)
    actions = []
    transitions = {}
    for s in range(n):
        acts = action_order.get(s)
        if not acts:
            raise ParseError(f"state '{state_order[s]}' has no outgoing transitions "
                             "(empty action set)")
        if pmc and len(acts) > 1:
            raise ParseError(f"pmc state '{state_order[s]}' has multiple actions")
        actions.append(tuple(acts))
        for a, aname in enumerate(acts):
            row = rows[(s, aname)]
            total = AffineExpr.const(0)
            for _, expr in row:
                total = total + expr
            if total != AffineExpr.const(1):
                raise ParseError(f"row ({state_order[s]},{aname}) sums to {total}, not 1")
            transitions[(s, a)] = tuple(row)

    costs = None
    if cost_lines:
        costs = {}
        for lineno, fields in cost_lines:
            if pmc and len(fields) == 2:
                sname, val = fields
                aname = actions[state_ids.get(sname, -1)][0] if sname in state_ids else "a"
            elif len(fields) == 3:
                sname, aname, val = fields
            else:
                raise ParseError("cost line needs <state> <action> <rational>", lineno)
            if sname not in state_ids:
                raise ParseError(f"cost for unknown state '{sname}'", lineno)
            s = state_ids[sname]
            if aname not in actions[s]:
                raise ParseError(f"cost for unknown action '{aname}' of '{sname}'", lineno)
            c = parse_rational(val, lineno)
            if c < 0:
                raise ParseError("costs must be nonnegative", lineno)
            costs[(s, actions[s].index(aname))] = c

    if initial_name not in state_ids:
        raise ParseError(f"initial state '{initial_name}' has no transitions")
    targets = frozenset(state_ids[t] for t in target_names if t in state_ids)
    for t in target_names:
        if t not in state_ids:
            raise ParseError(f"target state '{t}' does not occur in the model")

    try:
        return PMDP(
            state_names=tuple(state_order),
            initial=state_ids[initial_name],
            params=tuple(params),
            param_bounds=bounds,
            actions=tuple(actions),
            transitions=transitions,
            targets=targets,
            costs=costs,
        )
    except ModelError as exc:
        raise ParseError(str(exc))


def serialize_model(m: PMDP) -> str:
    # the action-less pmc form only represents the implicit action name
    pmc = m.is_pmc() and all(acts == ("a",) for acts in m.actions)
    lines = [f"@type {'pmc' if pmc else 'pmdp'}"]
    lines.append("@states " + " ".join(m.state_names))
    if m.params:
        parts = " ".join(f"{p} [{m.param_bounds[p][0]},{m.param_bounds[p][1]}]"
                         for p in m.params)
        lines.append(f"@parameters {parts}")
    lines.append(f"@initial {m.state_names[m.initial]}")
    if m.targets:
        lines.append("@targets " + " ".join(m.state_names[t] for t in sorted(m.targets)))
    for s, a, row in m.rows():
        for dest, expr in row:
            expr_text = str(expr).replace(" ", "")
            if pmc:
                lines.append(f"{m.state_names[s]} {m.state_names[dest]} {expr_text}")
            else:
                lines.append(f"{m.state_names[s]} {m.actions[s][a]} "
                             f"{m.state_names[dest]} {expr_text}")
    if m.costs:
        lines.append("@costs")
        for (s, a), c in sorted(m.costs.items()):
            lines.append(f"{m.state_names[s]} {m.actions[s][a]} {c}")
    return "\n".join(lines) + "\n"


_SPEC_RE = re.compile(r"^\s*([PE])\s*(<=|>=)\s*(\S+)\s*$")


def parse_spec(text: str) -> Specification:
    m = _SPEC_RE.match(text)
    if not m:
        raise ParseError(f"malformed specification '{text}' (expected e.g. P<=0.1, E>=3)")
    kind = "reach" if m.group(1) == "P" else "cost"
    direction = "at-most" if m.group(2) == "<=" else "at-least"
    threshold = parse_rational(m.group(3))
    try:
        return Specification(kind, direction, threshold)
    except ModelError as exc:
        raise ParseError(str(exc))


def serialize_valuation(u: dict[str, float], order: list[str] | None = None) -> str:
    names = order if order is not None else sorted(u)
    return "".join(f"{name} = {float(u[name])!r}\n" for name in names)


def parse_valuation(text: str) -> Instantiation:
    u: Instantiation = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ParseError("valuation line must be '<id> = <value>'", lineno)
        name, _, val = stripped.partition("=")
        u[name.strip()] = parse_rational(val.strip(), lineno)
    return u
