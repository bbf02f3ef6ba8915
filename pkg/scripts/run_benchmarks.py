"""Compare MAP-Elites and both BQD variants on the benchmark suites.

Runs every (suite, algorithm) pair over ``--seeds`` repetitions from shared
initial designs, writes the per-run and aggregate CSVs plus final archives to
``--out``, and prints the final median qd_score and niche count.

    python scripts/run_benchmarks.py --suites rosenbrock --seeds 2
    python scripts/run_benchmarks.py --out results/desk_scale   # about 1.5 h on one core
"""
from __future__ import annotations

import argparse
import time
from pathlib import Path

from bayesqd.bayesian_qd import BqdConfig
from bayesqd.cli import experiment_stem, write_outputs
from bayesqd.harness import Algorithm, ExperimentSpec, run_experiment
from bayesqd.map_elites import MapElitesConfig

# exact-evaluation budgets of the desk-scale comparison
BUDGETS = {"rosenbrock": 160, "trid": 240, "styblinski": 220}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--suites", nargs="+", default=list(BUDGETS), choices=list(BUDGETS))
    parser.add_argument("--algorithms", nargs="+", default=[a.value for a in Algorithm],
                        choices=[a.value for a in Algorithm])
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--base-seed", type=int, default=0)
    parser.add_argument("--budget", type=int, default=None, help="override the per-suite budget")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", type=Path, default=Path("results/benchmarks"))
    args = parser.parse_args(argv)

    index = 0
    print(f"{'suite':<11} {'algorithm':<16} {'evals':>5} {'median_qd':>11} {'median_niches':>13} {'s/run':>6}")
    for suite in args.suites:
        budget = args.budget or BUDGETS[suite]
        for alg in map(Algorithm, args.algorithms):
            cfg = BqdConfig() if alg.is_bqd else MapElitesConfig(population_size=10)
            spec = ExperimentSpec(suite, alg, cfg, repetitions=args.seeds,
                                  base_seed=args.base_seed, max_evaluations=budget)
            t0 = time.perf_counter()
            result = run_experiment(spec, threads=args.threads)
            per_run = (time.perf_counter() - t0) / args.seeds
            write_outputs(args.out, experiment_stem(index, spec), result)
            index += 1
            qd, niches = result.series.final()
            print(f"{suite:<11} {alg.value:<16} {budget:>5} {qd:>11.4g} {niches:>13g} {per_run:>6.0f}", flush=True)


if __name__ == "__main__":
    main()
