"""Constrained MAP-Elites for mixed continuous / discrete / categorical genomes.

Used both as the baseline optimizer on the exact problem and as the solver of
the surrogate infill problem inside Bayesian QD.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .archive import Archive
from .problem import QdProblem
from .space import (
    MixedSpace,
    PointSet,
    denormalize_continuous,
    lhs_sample,
    normalize_continuous,
)

MUTATION_PROB = 0.4
MUTATION_SD = 0.3
AUX_GENERATIONS = 4000


@dataclass(frozen=True)
class MapElitesConfig:
    population_size: int = 10
    batch_size: int | None = None  # defaults to population_size
    generations: int = 100
    mutation_prob: float = MUTATION_PROB
    mutation_sd: float = MUTATION_SD
    seed: int = 0

    def __post_init__(self):
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0 < self.mutation_prob <= 1:
            raise ValueError("mutation_prob must be in (0, 1]")
        if not self.mutation_sd > 0:
            raise ValueError("mutation_sd must be positive")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")

    @property
    def batch(self) -> int:
        return self.population_size if self.batch_size is None else self.batch_size

    def with_budget(self, evaluations: int) -> "MapElitesConfig":
        """Same settings, with generations chosen to spend ``evaluations``."""
        gens = max(0, (evaluations - self.population_size) // self.batch)
        return replace(self, generations=gens)


@dataclass
class MapElitesResult:
    archive: Archive
    eval_count: int
    # rows of (cumulative evaluations, qd_score, niche_count)
    history: list[tuple[int, float, int]] = field(default_factory=list)


def mutate_batch(points: PointSet, space: MixedSpace, prob: float, sd: float,
                 rng: np.random.Generator) -> PointSet:
    """Per-coordinate mutation.

    Continuous coordinates get Gaussian noise in normalized units, clamped to
    the bounds; selected level coordinates jump uniformly to one of the other
    levels.
    """
    n = len(points)
    u = normalize_continuous(space, points.continuous)
    mask = rng.random(u.shape) < prob
    u = np.clip(u + mask * rng.normal(0.0, sd, size=u.shape), 0.0, 1.0)
    x = denormalize_continuous(space, u)

    def jump(levels: np.ndarray, counts) -> np.ndarray:
        out = levels.copy()
        for k, L in enumerate(counts):
            sel = rng.random(n) < prob
            if L > 1:
                out[:, k] = np.where(sel, (levels[:, k] + rng.integers(1, L, size=n)) % L, levels[:, k])
        return out

    disc = jump(points.discrete, [len(v) for v in space.discrete_levels])
    cat = jump(points.categorical, space.categorical_levels)
    return PointSet(x, disc, cat)


def mutate(p, space: MixedSpace, cfg: MapElitesConfig, rng: np.random.Generator):
    """Mutate a single :class:`~bayesqd.space.MixedPoint`."""
    return mutate_batch(PointSet.from_points([p], space), space, cfg.mutation_prob, cfg.mutation_sd, rng)[0]


def run_map_elites(problem: QdProblem, cfg: MapElitesConfig, initial: PointSet | None = None) -> MapElitesResult:
    """Run constrained MAP-Elites for ``cfg.generations`` generations.

    The initial population is ``initial`` when given, otherwise an LHS of
    ``cfg.population_size`` points seeded with ``cfg.seed``. Each generation
    draws ``cfg.batch`` parents uniformly (with replacement) from the archive,
    mutates and evaluates them. When the archive is still empty, parents are
    drawn from a fresh LHS instead.
    """
    space = problem.space
    rng = np.random.default_rng([cfg.seed, 1])
    if initial is None:
        initial = lhs_sample(space, cfg.population_size, cfg.seed)
    archive = Archive(problem.grid)
    history = []
    evals = 0
    if len(initial):
        y, f, g = problem.evaluate_checked(initial)
        evals += len(initial)
        archive.insert_batch(initial, y, f, g)
        history.append((evals, archive.qd_score(), archive.niche_count()))

    batch = cfg.batch
    genomes = archive.genomes(space)
    for _ in range(cfg.generations):
        if len(genomes) == 0:
            parents = lhs_sample(space, batch, int(rng.integers(2**31)))
        else:
            parents = genomes.take(rng.integers(0, len(genomes), size=batch))
        children = mutate_batch(parents, space, cfg.mutation_prob, cfg.mutation_sd, rng)
        y, f, g = problem.evaluate_checked(children)
        evals += batch
        outcomes = archive.insert_batch(children, y, f, g)
        if any(o.accepted for o in outcomes):
            genomes = archive.genomes(space)
        history.append((evals, archive.qd_score(), archive.niche_count()))
    return MapElitesResult(archive, evals, history)
