#!/usr/bin/env python3
"""Compare rebuilding the convexified program each iteration against
refreshing it in place with solver warm starts.

Uses an unsatisfiable threshold so both runs exhaust the same fixed
iteration budget and the timing comparison is apples to apples.
"""

import argparse
import sys
from fractions import Fraction

from pmdpsynth import CcpConfig, bench, synthesize
from pmdpsynth.model import Specification


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--size", type=int, default=500)
    ap.add_argument("--params", type=int, default=100)
    ap.add_argument("--iters", type=int, default=30)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    m = bench.maze(args.size, nparams=args.params, seed=args.seed)
    spec = Specification("reach", "at-least", Fraction(9, 10))
    print(f"maze: {m.num_states} states, {len(m.params)} parameters, "
          f"{args.iters} iterations each")

    totals = {}
    for inc in (False, True):
        cfg = CcpConfig(max_iters=args.iters, restarts=0, seed=args.seed,
                        incremental=inc)
        res = synthesize(m, spec, cfg)
        totals[inc] = res.solver_time + res.encode_time
        mode = "refresh+warm" if inc else "rebuild+cold"
        print(f"{mode}: solve {res.solver_time:.2f}s "
              f"encode {res.encode_time:.2f}s "
              f"total {totals[inc]:.2f}s ({res.iterations} iters, "
              f"{res.status})")
    print(f"ratio (refresh/rebuild): {totals[True] / totals[False]:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
