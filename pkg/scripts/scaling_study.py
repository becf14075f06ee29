#!/usr/bin/env python3
"""Scaling study: CCP vs PSO wall time on layered mazes of growing size.

Thresholds are placed just below a PSO estimate of the optimum, so every
instance is satisfiable. Emits one TSV row per instance.
"""

import argparse
import sys
import time
from fractions import Fraction

from pmdpsynth import CcpConfig, bench, synthesize
from pmdpsynth.model import Specification
from pmdpsynth.pso import PsoConfig, synthesize_pso, estimate_optimum


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+",
                    default=[50, 100, 200, 500, 1000, 2000])
    ap.add_argument("--param-fraction", type=float, default=0.5,
                    help="parameters per junction cell")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--pso-budget", type=int, default=200,
                    help="PSO iterations for the baseline run")
    args = ap.parse_args()

    print("size\tstates\tparams\tthreshold\tccp_s\tccp_iters\tccp_status"
          "\tpso_s\tpso_status")
    for size in args.sizes:
        nparams = max(1, int(size * args.param_fraction))
        m = bench.maze(size, nparams=nparams, seed=args.seed)
        opt = estimate_optimum(
            m, Specification("reach", "at-least", Fraction(1)),
            PsoConfig(particles=10, max_iters=10, seed=args.seed))
        thr = Fraction(max(opt * 0.9, 1e-9)).limit_denominator(10 ** 12)
        spec = Specification("reach", "at-least", thr)

        t0 = time.perf_counter()
        ccp = synthesize(m, spec, CcpConfig(seed=args.seed, restarts=1))
        ccp_s = time.perf_counter() - t0

        t0 = time.perf_counter()
        pso = synthesize_pso(m, spec, PsoConfig(seed=args.seed,
                                                max_iters=args.pso_budget))
        pso_s = time.perf_counter() - t0

        print(f"{size}\t{m.num_states}\t{len(m.params)}\t{float(thr):.3g}"
              f"\t{ccp_s:.2f}\t{ccp.iterations}\t{ccp.status}"
              f"\t{pso_s:.2f}\t{pso.status}")
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
