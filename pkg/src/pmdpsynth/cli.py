"""Command-line front end: synth / check / gen.

Exit codes: 0 success (feasible / holds), 1 input or validation error,
2 exhausted / threshold violated, 3 not supported by the chosen method.
Results go to stdout, diagnostics and progress to stderr.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction
from pathlib import Path

from . import bench, encode, graph, parser, pso
from .ccp import CcpConfig, synthesize
from .mc import Checker
from .model import ModelError, check_well_defined
from .parser import ParseError


def _load_model(path: str):
    return parser.parse_model(Path(path).read_text())


def _result_block(res, order) -> str:
    lines = [f"status = {res.status}"]
    if res.value is not None:
        lines.append(f"value = {float(res.value)!r}")
    lines.append(f"iterations = {res.iterations}")
    lines.append(f"restarts = {res.restarts}")
    frac = res.solver_time / res.total_time if res.total_time > 0 else 0.0
    lines.append(f"solver_time_fraction = {frac:.3f}")
    if res.instantiation:
        lines.append(parser.serialize_valuation(res.instantiation, order).rstrip())
    return "\n".join(lines) + "\n"


def cmd_synth(args) -> int:
    try:
        m = _load_model(args.model)
        spec = parser.parse_spec(args.spec)
    except (ParseError, ModelError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    eps = Fraction(args.eps_graph)
    if args.dump_qcqp:
        try:
            analysis = graph.analyze(m, spec)
            nlp = encode.build_nlp(m, spec, analysis, eps)
            qcqp = encode.nlp_to_qcqp(nlp)
            Path(args.dump_qcqp).write_text(encode.dump_qcqp(qcqp))
        except (graph.InfeasibleCostError, encode.EncodingError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
    if args.method == "ccp":
        cfg = CcpConfig(
            tau0=args.tau0, tau_max=args.tau_max, eps_graph=eps,
            max_iters=args.max_iters, split=args.split,
            mc_tol=args.mc_tol, mc_feedback=not args.no_mc_feedback,
            seed=args.seed, progress=sys.stderr if args.verbose else None)
        res = synthesize(m, spec, cfg)
    else:
        try:
            cfg = pso.PsoConfig(particles=args.particles,
                                max_iters=args.pso_iters, seed=args.seed,
                                eps_graph=eps, mc_tol=args.mc_tol)
            res = pso.synthesize_pso(m, spec, cfg)
        except pso.NotSupportedError as exc:
            print(f"not supported: {exc}", file=sys.stderr)
            return 3
    sys.stdout.write(_result_block(res, list(m.params)))
    if res.status == "feasible":
        if args.out:
            Path(args.out).write_text(
                parser.serialize_valuation(res.instantiation, list(m.params)))
        return 0
    return 2


def cmd_check(args) -> int:
    try:
        m = _load_model(args.model)
        spec = parser.parse_spec(args.spec)
        u = parser.parse_valuation(Path(args.valuation).read_text())
    except (ParseError, ModelError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    missing = set(m.params) - set(u)
    if missing:
        print(f"error: valuation misses parameters {sorted(missing)}", file=sys.stderr)
        return 1
    verdict = check_well_defined(m, u, Fraction(args.eps_graph))
    if not verdict.ok:
        print("error: valuation is not well-defined:", file=sys.stderr)
        for v in verdict.violations:
            print(f"  {v}", file=sys.stderr)
        return 1
    try:
        graph.analyze(m, spec)
    except graph.InfeasibleCostError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    holds, value = Checker(m).check(u, spec, tol=args.mc_tol)
    print(f"value = {value!r}")
    print(f"holds = {str(holds).lower()}")
    return 0 if holds else 2


def cmd_gen(args) -> int:
    try:
        m = bench.generate(args.family, args.size, args.params, args.seed)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = parser.serialize_model(m)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pmdpsynth")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--model", required=True)
        p.add_argument("--spec", required=True)
        p.add_argument("--eps-graph", default="1/100000")
        p.add_argument("--mc-tol", type=float, default=1e-8)

    sp = sub.add_parser("synth", help="synthesize a feasible parameter valuation")
    sp.add_argument("method", choices=["ccp", "pso"])
    common(sp)
    sp.add_argument("--tau0", type=float, default=None)
    sp.add_argument("--tau-max", type=float, default=1e4)
    sp.add_argument("--max-iters", type=int, default=100)
    sp.add_argument("--split", choices=["bilinear", "eigen"], default="bilinear")
    sp.add_argument("--no-mc-feedback", action="store_true",
                    help="plain penalty CCP without per-iteration model checks")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--dump-qcqp", default=None)
    sp.add_argument("--out", default=None, help="write the valuation file here")
    sp.add_argument("--particles", type=int, default=40)
    sp.add_argument("--pso-iters", type=int, default=500)
    sp.add_argument("--verbose", action="store_true")
    sp.set_defaults(func=cmd_synth)

    cp = sub.add_parser("check", help="model-check a valuation against a spec")
    common(cp)
    cp.add_argument("--valuation", required=True)
    cp.set_defaults(func=cmd_check)

    gp = sub.add_parser("gen", help="emit a synthetic benchmark model")
    gp.add_argument("--family", choices=["grid", "maze", "chain"], required=True)
    gp.add_argument("--size", type=int, required=True)
    gp.add_argument("--params", type=int, default=None)
    gp.add_argument("--seed", type=int, default=0)
    gp.add_argument("--out", default=None)
    gp.set_defaults(func=cmd_gen)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
