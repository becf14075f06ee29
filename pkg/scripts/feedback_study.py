#!/usr/bin/env python3
"""Measure how much model checking inside the CCP loop saves.

For each seed, builds a layered maze, sets an at-least threshold just
under a PSO estimate of the optimum, and runs the synthesis loop twice:
once with per-iteration model checks (early termination plus anchor
feedback) and once as the plain penalty CCP. Reports iteration counts
and their medians.
"""

import argparse
import statistics
import sys
from fractions import Fraction

from pmdpsynth import CcpConfig, bench, synthesize
from pmdpsynth.model import Specification
from pmdpsynth.pso import PsoConfig, estimate_optimum

FAIL_SENTINEL = 300  # counted when a run does not reach a feasible verdict


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--size", type=int, default=120)
    ap.add_argument("--params", type=int, default=24)
    ap.add_argument("--margin", type=float, default=0.95,
                    help="threshold as a fraction of the PSO estimate")
    args = ap.parse_args()

    print("seed\tthreshold\titers_fb\tstatus_fb\titers_plain\tstatus_plain")
    fb, plain = [], []
    for s in range(args.seeds):
        m = bench.maze(args.size, nparams=args.params, seed=s)
        opt = estimate_optimum(
            m, Specification("reach", "at-least", Fraction(1, 2)),
            PsoConfig(particles=20, max_iters=40, seed=s))
        thr = Fraction(max(opt * args.margin, 1e-9)).limit_denominator(10 ** 12)
        spec = Specification("reach", "at-least", thr)
        a = synthesize(m, spec, CcpConfig(max_iters=150, restarts=1, seed=s,
                                          mc_feedback=True))
        b = synthesize(m, spec, CcpConfig(max_iters=150, restarts=1, seed=s,
                                          mc_feedback=False))
        fb.append(a.iterations if a.status == "feasible" else FAIL_SENTINEL)
        plain.append(b.iterations if b.status == "feasible" else FAIL_SENTINEL)
        print(f"{s}\t{float(thr):.4g}\t{fb[-1]}\t{a.status}"
              f"\t{plain[-1]}\t{b.status}")
        sys.stdout.flush()
    print(f"median iterations: {statistics.median(fb)} with feedback, "
          f"{statistics.median(plain)} without")
    return 0


if __name__ == "__main__":
    sys.exit(main())
