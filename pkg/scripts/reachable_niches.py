"""Count the feature bins that contain at least one feasible point.

For every bin and every combination of discrete/categorical levels a
differential-evolution search minimizes the distance of the features to the
bin (half-open, last bin per axis closed) plus the constraint violation. A
bin is reachable when some combination drives that penalty to zero. This
bounds the niche count any optimizer can reach on a suite.

    python scripts/reachable_niches.py trid
    python scripts/reachable_niches.py styblinski --maxiter 200
"""
from __future__ import annotations

import argparse
import itertools

import numpy as np
from scipy.optimize import differential_evolution

from bayesqd.benchmarks import SUITES, get_suite
from bayesqd.space import PointSet

# stand-in for "strictly below the right edge" of a half-open bin
OPEN_EDGE = 1e-9


def bin_penalty(problem, levels, lo, hi, closed_right):
    n = len(levels)
    d_d = problem.space.d_d

    def penalty(x):
        # vectorized call: x has shape (d_c, S)
        x = np.atleast_2d(x.T)
        z = np.tile(levels, (x.shape[0], 1))
        pts = PointSet(x, z[:, :d_d], z[:, d_d:n])
        _, f, g = problem.evaluate_checked(pts)
        upper = np.where(closed_right, hi, hi - OPEN_EDGE)
        gap = np.maximum(0.0, np.maximum(lo - f, f - upper)).sum(axis=1)
        return gap + np.maximum(g, 0.0).sum(axis=1)

    return penalty


def reachable_bins(name: str, maxiter: int = 300, seed: int = 0) -> list[tuple[int, ...]]:
    problem = get_suite(name)
    grid = problem.grid
    bounds = problem.space.continuous_bounds
    combos = list(itertools.product(*(range(n) for n in problem.space.level_counts)))
    found = []
    for bin_ in np.ndindex(*grid.shape):
        lo = np.array([e[i] for e, i in zip(grid.edges, bin_)])
        hi = np.array([e[i + 1] for e, i in zip(grid.edges, bin_)])
        closed = np.array([i == e.size - 2 for e, i in zip(grid.edges, bin_)])
        for levels in combos:
            res = differential_evolution(bin_penalty(problem, np.array(levels), lo, hi, closed), bounds,
                                         seed=seed, tol=1e-12, maxiter=maxiter, vectorized=True,
                                         updating="deferred", polish=False)
            if res.fun <= 0.0:
                found.append(tuple(int(i) for i in bin_))
                break
    return found


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("suite", choices=sorted(SUITES))
    parser.add_argument("--maxiter", type=int, default=300)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    found = reachable_bins(args.suite, args.maxiter, args.seed)
    n_bins = get_suite(args.suite).grid.n_bins
    print(f"{args.suite}: {len(found)} of {n_bins} bins reachable")
    for b in found:
        print("  ", b)


if __name__ == "__main__":
    main()
