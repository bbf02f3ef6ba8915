"""Surrogate-assisted quality-diversity loop.

Each outer iteration fits one GP per objective, feature and constraint on
every exact evaluation so far, illuminates the surrogate infill problem with
MAP-Elites (objective: lower confidence bound; constraints: expected violation
below a threshold; features: GP means), then evaluates a Sobol'-spread subset
of the surrogate elites exactly and adds them to the exact archive.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import ndtr

from . import gp as gp_mod
from .archive import Archive, FeatureGrid, InsertOutcome
from .kernels import KernelMode
from .map_elites import AUX_GENERATIONS, MapElitesConfig, run_map_elites
from .problem import QdProblem
from .space import MixedPoint, PointSet, lhs_sample, sobol_points

logger = logging.getLogger(__name__)

EXPLORATION_K = 2.0
EV_THRESHOLD = 1e-4
BATCH_P = 10
STAGNATION_ITERS = 10

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class BqdConfig:
    kernel_mode: KernelMode = KernelMode.GOWER
    max_evaluations: int = 160
    initial_doe_size: int | None = None  # default 10 * (d_c + d_d + d_q)
    exploration_k: float = EXPLORATION_K
    ev_thresholds: tuple[float, ...] | None = None  # default EV_THRESHOLD per constraint
    batch_p: int = BATCH_P
    stagnation_iters: int = STAGNATION_ITERS
    aux_solver: MapElitesConfig = field(
        default_factory=lambda: MapElitesConfig(population_size=10, generations=AUX_GENERATIONS)
    )
    gp_restarts: int = gp_mod.N_RESTARTS
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kernel_mode", KernelMode(self.kernel_mode))
        if self.batch_p < 1:
            raise ValueError("batch_p must be >= 1")
        if self.exploration_k < 0:
            raise ValueError("exploration_k must be nonnegative")
        if self.ev_thresholds is not None and any(t < 0 for t in self.ev_thresholds):
            raise ValueError("EV thresholds must be nonnegative")
        if self.initial_doe_size is not None and self.initial_doe_size < 1:
            raise ValueError("initial_doe_size must be >= 1")
        if self.max_evaluations < 1:
            raise ValueError("max_evaluations must be >= 1")

    def doe_size(self, problem: QdProblem) -> int:
        if self.initial_doe_size is not None:
            return self.initial_doe_size
        s = problem.space
        return 10 * (s.d_c + s.d_d + s.d_q)

    def thresholds(self, n_constraints: int) -> np.ndarray:
        if self.ev_thresholds is None:
            return np.full(n_constraints, EV_THRESHOLD)
        t = np.asarray(self.ev_thresholds, dtype=float)
        if t.size != n_constraints:
            raise ValueError(f"{t.size} EV thresholds for {n_constraints} constraints")
        return t


def lcb(model: gp_mod.GpModel, p: MixedPoint, k: float) -> float:
    mean, sd = model.predict(p)
    return mean - k * sd


def expected_violation_from_moments(mean, sd) -> np.ndarray:
    """E[max(G, 0)] for G ~ N(mean, sd^2); reduces to max(mean, 0) as sd -> 0."""
    mean = np.asarray(mean, dtype=float)
    sd = np.asarray(sd, dtype=float)
    tiny = sd < 1e-12
    safe_sd = np.where(tiny, 1.0, sd)
    z = mean / safe_sd
    ev = mean * ndtr(z) + safe_sd * _INV_SQRT_2PI * np.exp(-0.5 * z * z)
    ev = np.where(tiny, np.maximum(mean, 0.0), ev)
    return np.maximum(ev, 0.0)


def expected_violation(model: gp_mod.GpModel, p: MixedPoint) -> float:
    mean, sd = model.predict(p)
    return float(expected_violation_from_moments(mean, sd))


@dataclass
class SurrogateModels:
    objective: gp_mod.GpModel
    features: list[gp_mod.GpModel]
    constraints: list[gp_mod.GpModel]


def build_auxiliary_problem(models: SurrogateModels, problem: QdProblem, k: float,
                            thresholds) -> QdProblem:
    """Infill problem on the surrogates.

    Objective: mean - k * sd of the objective GP. Features: feature GP means.
    Constraints: EV_i - t_i, so the archive's ``<= 0`` rule means EV_i <= t_i.
    """
    if len(models.features) != problem.n_features or len(models.constraints) != problem.n_constraints:
        raise ValueError("one surrogate per feature and per constraint is required")
    thresholds = np.asarray(thresholds, dtype=float)
    if thresholds.size != problem.n_constraints:
        raise ValueError("one EV threshold per constraint is required")
    for m in [models.objective, *models.features, *models.constraints]:
        if m.space != problem.space:
            raise ValueError("surrogate trained on a different space")

    def evaluate(points: PointSet):
        mu, sd = models.objective.predict_batch(points)
        feats = np.column_stack([m.predict_batch(points)[0] for m in models.features])
        cons = np.empty((len(points), problem.n_constraints))
        for i, m in enumerate(models.constraints):
            cons[:, i] = expected_violation_from_moments(*m.predict_batch(points)) - thresholds[i]
        return mu - k * sd, feats, cons

    return QdProblem(problem.space, problem.grid, evaluate, problem.n_features,
                     problem.n_constraints, name=f"{problem.name}-infill")


def select_elites_sobol(archive: Archive, p: int, grid: FeatureGrid | None = None,
                        seed=None, scramble: bool = True) -> list[MixedPoint]:
    """Pick up to ``p`` distinct elites spread over the feature space.

    Sobol' points in the unit feature box are mapped to the nearest occupied
    bin center (per-axis scaling to [0, 1]); repeated bins are skipped until
    ``min(p, occupied)`` elites are chosen.
    """
    if p < 1:
        raise ValueError("p must be >= 1")
    grid = archive.grid if grid is None else grid
    bins = list(archive.cells)
    if not bins:
        return []
    target = min(p, len(bins))
    centers = np.array([grid.bin_center(b) for b in bins])
    centers = (centers - grid.lower) / (grid.upper - grid.lower)
    chosen: list[int] = []
    taken = np.zeros(len(bins), dtype=bool)
    n = 64
    drawn = 0
    while len(chosen) < target and n <= 2**20:
        pts = sobol_points(grid.n_features, n, seed=seed, scramble=scramble)[drawn:]
        drawn = n
        d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        for i in np.argmin(d2, axis=1):
            if not taken[i]:
                taken[i] = True
                chosen.append(int(i))
                if len(chosen) == target:
                    break
        n *= 4
    # every occupied bin owns a cell of positive volume, so this is a backstop
    for i in range(len(bins)):
        if len(chosen) == target:
            break
        if not taken[i]:
            taken[i] = True
            chosen.append(i)
    return [archive.cells[bins[i]].point for i in chosen]


@dataclass
class BqdResult:
    archive: Archive
    # rows of (cumulative exact evaluations, qd_score, niche_count)
    history: list[tuple[int, float, int]]
    doe: PointSet
    objectives: np.ndarray
    features: np.ndarray
    constraints: np.ndarray
    iterations: int
    stop_reason: str

    @property
    def eval_count(self) -> int:
        return len(self.doe)


def fit_surrogates(problem: QdProblem, X: PointSet, y, F, G, mode: KernelMode, seed,
                   restarts: int = gp_mod.N_RESTARTS) -> SurrogateModels:
    seeds = np.random.SeedSequence(seed).generate_state(1 + problem.n_features + problem.n_constraints)
    fit = lambda out, s: gp_mod.fit(problem.space, X, out, mode, seed=int(s), n_restarts=restarts)
    obj = fit(y, seeds[0])
    feats = [fit(F[:, j], seeds[1 + j]) for j in range(problem.n_features)]
    cons = [fit(G[:, i], seeds[1 + problem.n_features + i]) for i in range(problem.n_constraints)]
    return SurrogateModels(obj, feats, cons)


def run_bqd(problem: QdProblem, cfg: BqdConfig, initial: PointSet | None = None) -> BqdResult:
    """Run Bayesian QD until the exact-evaluation budget or stagnation.

    The initial DoE is ``initial`` if given, else an LHS of
    ``cfg.doe_size(problem)`` points seeded with ``cfg.seed``.
    """
    space = problem.space
    if initial is None:
        n0 = min(cfg.doe_size(problem), cfg.max_evaluations)
        initial = lhs_sample(space, n0, cfg.seed)
    thresholds = cfg.thresholds(problem.n_constraints)

    X = initial
    y, F, G = problem.evaluate_checked(X)
    archive = Archive(problem.grid)
    archive.insert_batch(X, y, F, G)
    history = [(len(X), archive.qd_score(), archive.niche_count())]

    it = 0
    stagnant = 0
    stop = "budget"
    while len(X) < cfg.max_evaluations:
        if stagnant >= cfg.stagnation_iters:
            stop = "stagnation"
            break
        it += 1
        p = min(cfg.batch_p, cfg.max_evaluations - len(X))
        iter_seed = np.random.SeedSequence([cfg.seed, it]).generate_state(3)
        try:
            models = fit_surrogates(problem, X, y, F, G, cfg.kernel_mode, int(iter_seed[0]), cfg.gp_restarts)
        except gp_mod.GpFitError as exc:
            logger.warning("iteration %d: GP fit failed (%s); sampling %d LHS points", it, exc, p)
            candidates = lhs_sample(space, p, int(iter_seed[1]))
        else:
            aux = build_auxiliary_problem(models, problem, cfg.exploration_k, thresholds)
            aux_cfg = replace(cfg.aux_solver, seed=int(iter_seed[1]))
            aux_archive = run_map_elites(aux, aux_cfg).archive
            elites = select_elites_sobol(aux_archive, p, problem.grid, seed=int(iter_seed[2]))
            if elites:
                candidates = PointSet.from_points(elites, space)
            else:
                logger.info("iteration %d: empty infill archive; sampling %d LHS points", it, p)
                candidates = lhs_sample(space, p, int(iter_seed[1]))

        yc, Fc, Gc = problem.evaluate_checked(candidates)
        outcomes = archive.insert_batch(candidates, yc, Fc, Gc)
        X = X.concat(candidates)
        y = np.concatenate([y, yc])
        F = np.vstack([F, Fc])
        G = np.vstack([G, Gc])
        history.append((len(X), archive.qd_score(), archive.niche_count()))
        if any(o in (InsertOutcome.NEW_NICHE, InsertOutcome.IMPROVED) for o in outcomes):
            stagnant = 0
        else:
            stagnant += 1
        logger.debug("iteration %d: evals=%d niches=%d qd=%.4g", it, len(X),
                     archive.niche_count(), archive.qd_score())

    return BqdResult(archive, history, X, y, F, G, it, stop)
