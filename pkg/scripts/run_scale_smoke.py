#!/usr/bin/env python3
"""Time unit-cost greedy in estimate mode on a large random graph.

Defaults: 1e5 nodes, 5e5 edges with weighted-cascade probabilities
(1 / in-degree), 50 seeds, 500 sampled candidates, k = 10, 1e4 samples.

    COSTIMA_WORKERS=4 python scripts/run_scale_smoke.py
"""

import argparse
import time

from costima.diffusion import SamplingConfig, configure_workers
from costima.experiment import gen_random_instance
from costima.solvers import SolverConfig, greedy_ima


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--edges", type=int, default=500_000)
    ap.add_argument("--prob", default="wc")
    ap.add_argument("--num-seeds", type=int, default=50)
    ap.add_argument("--candidates", type=int, default=500)
    ap.add_argument("--k", type=int, default=10)
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--workers", type=int)
    args = ap.parse_args()
    configure_workers(args.workers)

    t0 = time.perf_counter()
    inst = gen_random_instance(args.n, None, args.prob, args.num_seeds,
                               f"sample:{args.candidates}", cost="unit", budget=args.k,
                               rng_seed=args.seed, num_edges=args.edges)
    t1 = time.perf_counter()
    sol = greedy_ima(inst, SolverConfig("estimate", SamplingConfig(args.samples, args.seed)))
    t2 = time.perf_counter()
    print(f"generate {t1 - t0:7.1f}s   greedy {t2 - t1:7.1f}s")
    for t in sol.trace:
        print(f"  step {t.iteration:2d}  edge ({t.src},{t.dst})  gain {t.value:9.3f}"
              f"  sigma {t.sigma:10.3f}")
    print(f"sigma = {sol.sigma:.3f} with {len(sol.chosen)} edges")


if __name__ == "__main__":
    main()
