"""Repetition-level experiment orchestration and convergence statistics.

Repetition ``r`` of an experiment uses seed ``base_seed + r``. Every
algorithm starts from the same initial design for a given seed (an LHS of
``initial_size`` points), so MAP-Elites and BQD runs that share a base seed
also share their first evaluations. Histories are aligned onto common
evaluation checkpoints with a step function (last value carried forward) and
summarized by linear-interpolation quantiles.
"""
from __future__ import annotations

import csv
import enum
import io
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .archive import Archive
from .bayesian_qd import BqdConfig, run_bqd
from .benchmarks import SUITES, get_suite
from .kernels import KernelMode
from .map_elites import MapElitesConfig, run_map_elites
from .problem import QdProblem
from .space import lhs_sample

logger = logging.getLogger(__name__)

RUN_COLUMNS = ("algorithm", "suite", "repetition", "evals", "qd_score", "niche_count")
AGGREGATE_COLUMNS = ("algorithm", "suite", "evals", "median_qd", "q25_qd", "q75_qd",
                     "median_niches", "q25_niches", "q75_niches")


class Algorithm(str, enum.Enum):
    MAP_ELITES = "MAP_ELITES"
    BQD_GOWER = "BQD_GOWER"
    BQD_HYPERSPHERE = "BQD_HYPERSPHERE"

    @property
    def is_bqd(self) -> bool:
        return self is not Algorithm.MAP_ELITES


def default_initial_size(problem: QdProblem) -> int:
    s = problem.space
    return 10 * (s.d_c + s.d_d + s.d_q)


@dataclass(frozen=True)
class ExperimentSpec:
    """One algorithm on one suite, repeated over consecutive seeds.

    ``config`` is a :class:`MapElitesConfig` for MAP-Elites and a
    :class:`BqdConfig` for the BQD variants (its kernel mode and seed are
    overridden). ``initial_size`` fixes the shared initial design; None means
    ``10 * (d_c + d_d + d_q)`` and 0 lets each algorithm draw its own.
    ``max_evaluations``, when set, is the exact-evaluation budget of every
    repetition: it replaces ``BqdConfig.max_evaluations`` and sets the
    MAP-Elites generation count.
    """

    suite: str
    algorithm: Algorithm
    config: MapElitesConfig | BqdConfig | None = None
    repetitions: int = 1
    base_seed: int = 0
    initial_size: int | None = None
    max_evaluations: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "algorithm", Algorithm(self.algorithm))
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.suite not in SUITES:
            raise ValueError(f"unknown suite {self.suite!r}; choose from {sorted(SUITES)}")
        if self.initial_size is not None and self.initial_size < 0:
            raise ValueError("initial_size must be >= 0")
        if self.max_evaluations is not None and self.max_evaluations < 1:
            raise ValueError("max_evaluations must be >= 1")
        cfg = self.config
        if cfg is None:
            cfg = BqdConfig() if self.algorithm.is_bqd else MapElitesConfig()
            object.__setattr__(self, "config", cfg)
        expected = BqdConfig if self.algorithm.is_bqd else MapElitesConfig
        if not isinstance(cfg, expected):
            raise TypeError(f"{self.algorithm.value} needs a {expected.__name__}, got {type(cfg).__name__}")

    def seed(self, repetition: int) -> int:
        return self.base_seed + repetition


@dataclass
class RunRecord:
    repetition: int
    seed: int
    # (K, 3) array of (evals, qd_score, niche_count)
    history: np.ndarray
    archive: Archive
    result: object = None


@dataclass
class ConvergenceSeries:
    algorithm: Algorithm
    suite: str
    runs: list[np.ndarray]
    checkpoints: np.ndarray
    median_qd: np.ndarray
    q25_qd: np.ndarray
    q75_qd: np.ndarray
    median_niches: np.ndarray
    q25_niches: np.ndarray
    q75_niches: np.ndarray

    def final(self) -> tuple[float, float]:
        """Median qd_score and niche_count at the last checkpoint."""
        return float(self.median_qd[-1]), float(self.median_niches[-1])


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    series: ConvergenceSeries
    runs: list[RunRecord] = field(default_factory=list)

    @property
    def archives(self) -> list[Archive]:
        return [r.archive for r in self.runs]


class ExperimentError(RuntimeError):
    def __init__(self, message: str, completed: list[int]):
        super().__init__(f"{message} (completed repetitions: {completed})")
        self.completed = completed


def run_repetition(spec: ExperimentSpec, repetition: int) -> RunRecord:
    problem = get_suite(spec.suite)
    seed = spec.seed(repetition)
    n0 = default_initial_size(problem) if spec.initial_size is None else spec.initial_size
    initial = lhs_sample(problem.space, n0, seed) if n0 > 0 else None
    budget = spec.max_evaluations
    if spec.algorithm.is_bqd:
        mode = KernelMode.GOWER if spec.algorithm is Algorithm.BQD_GOWER else KernelMode.HYPERSPHERE
        cfg = replace(spec.config, kernel_mode=mode, seed=seed)
        if budget is not None:
            cfg = replace(cfg, max_evaluations=budget)
        if initial is not None and len(initial) > cfg.max_evaluations:
            initial = initial.take(np.arange(cfg.max_evaluations))
        res = run_bqd(problem, cfg, initial=initial)
    else:
        cfg = replace(spec.config, seed=seed)
        if budget is not None:
            start = cfg.population_size if initial is None else len(initial)
            cfg = replace(cfg, generations=max(0, (budget - start) // cfg.batch))
        res = run_map_elites(problem, cfg, initial=initial)
    history = np.array(res.history, dtype=float).reshape(-1, 3)
    return RunRecord(repetition, seed, history, res.archive, res)


def step_align(history: np.ndarray, checkpoints) -> np.ndarray:
    """Values of a (K, 3) history at ``checkpoints``, last value carried forward.

    Checkpoints before the first record take the first record's values.
    """
    history = np.asarray(history, dtype=float)
    checkpoints = np.asarray(checkpoints, dtype=float)
    idx = np.searchsorted(history[:, 0], checkpoints, side="right") - 1
    return history[np.maximum(idx, 0), 1:]


def common_checkpoints(histories) -> np.ndarray:
    """Union of recorded eval counts, starting where every repetition has data."""
    start = max(h[0, 0] for h in histories)
    evals = np.unique(np.concatenate([h[:, 0] for h in histories]))
    return evals[evals >= start]


def aggregate_quantiles(values) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Median, 25th and 75th percentile over axis 0 (repetitions).

    Linear interpolation between order statistics, so {1, 2, 3, 4} gives a
    25th percentile of 1.75.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim == 0 or v.shape[0] < 1:
        raise ValueError("need at least one repetition")
    q = np.quantile(v, [0.5, 0.25, 0.75], axis=0, method="linear")
    return q[0], q[1], q[2]


def build_series(algorithm: Algorithm, suite: str, histories: list[np.ndarray]) -> ConvergenceSeries:
    checkpoints = common_checkpoints(histories)
    aligned = np.stack([step_align(h, checkpoints) for h in histories])  # (R, C, 2)
    mq, lq, uq = aggregate_quantiles(aligned[:, :, 0])
    mn, ln, un = aggregate_quantiles(aligned[:, :, 1])
    return ConvergenceSeries(Algorithm(algorithm), suite, list(histories), checkpoints.astype(int),
                             mq, lq, uq, mn, ln, un)


def run_experiment(spec: ExperimentSpec, threads: int | None = 1) -> ExperimentResult:
    """Run every repetition of ``spec`` and aggregate the convergence curves.

    With ``threads`` > 1 repetitions run in worker processes; results do not
    depend on the worker count.
    """
    reps = list(range(spec.repetitions))
    workers = min(threads or os.cpu_count() or 1, len(reps))
    records: dict[int, RunRecord] = {}
    if workers <= 1:
        for r in reps:
            try:
                records[r] = run_repetition(spec, r)
            except Exception as exc:
                raise ExperimentError(f"repetition {r} failed: {exc!r}", sorted(records)) from exc
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {r: pool.submit(run_repetition, spec, r) for r in reps}
            failure = None
            for r, fut in futures.items():
                try:
                    records[r] = fut.result()
                except Exception as exc:
                    failure = failure or (r, exc)
            if failure is not None:
                r, exc = failure
                raise ExperimentError(f"repetition {r} failed: {exc!r}", sorted(records)) from exc
    runs = [records[r] for r in reps]
    series = build_series(spec.algorithm, spec.suite, [run.history for run in runs])
    return ExperimentResult(spec, series, runs)


def _fmt(x: float) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 2**53 else repr(x)


def runs_csv(series: ConvergenceSeries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RUN_COLUMNS)
    for rep, h in enumerate(series.runs):
        for evals, qd, niches in h:
            w.writerow([series.algorithm.value, series.suite, rep, int(evals), _fmt(qd), int(niches)])
    return buf.getvalue()


def aggregate_csv(series: ConvergenceSeries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(AGGREGATE_COLUMNS)
    for i, evals in enumerate(series.checkpoints):
        w.writerow([series.algorithm.value, series.suite, int(evals),
                    _fmt(series.median_qd[i]), _fmt(series.q25_qd[i]), _fmt(series.q75_qd[i]),
                    _fmt(series.median_niches[i]), _fmt(series.q25_niches[i]), _fmt(series.q75_niches[i])])
    return buf.getvalue()


def atomic_write_text(path, text: str) -> Path:
    """Write ``text`` to ``path`` through a temporary file and an atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path
