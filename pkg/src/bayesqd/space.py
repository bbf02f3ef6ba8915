"""Mixed continuous / discrete / categorical search spaces and sampling.

Points are kept in two forms: :class:`MixedPoint` for single candidates at
API boundaries, and :class:`PointSet` (three aligned arrays) for everything
that runs in batches.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.stats import qmc

SOBOL_MAX_DIM = 21201  # size of the bundled Joe-Kuo direction-number table


@dataclass(frozen=True)
class MixedPoint:
    continuous: tuple[float, ...]
    discrete: tuple[int, ...] = ()
    categorical: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "continuous", tuple(float(v) for v in self.continuous))
        object.__setattr__(self, "discrete", tuple(int(v) for v in self.discrete))
        object.__setattr__(self, "categorical", tuple(int(v) for v in self.categorical))

    def to_dict(self) -> dict:
        return {
            "continuous": list(self.continuous),
            "discrete": list(self.discrete),
            "categorical": list(self.categorical),
        }


@dataclass(frozen=True)
class MixedSpace:
    """Search domain.

    Parameters
    ----------
    continuous_bounds : sequence of (lower, upper)
    discrete_levels : sequence of strictly increasing level-value lists
        Discrete variables are stored as level indices; the values are only
        kept for reporting.
    categorical_levels : sequence of int
        Number of unordered levels per categorical variable.
    """

    continuous_bounds: tuple[tuple[float, float], ...] = ()
    discrete_levels: tuple[tuple[float, ...], ...] = ()
    categorical_levels: tuple[int, ...] = ()
    _lower: np.ndarray = field(init=False, repr=False, compare=False)
    _width: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.continuous_bounds)
        for lo, hi in bounds:
            if not lo < hi:
                raise ValueError(f"invalid continuous bounds ({lo}, {hi})")
        disc = tuple(tuple(float(v) for v in levels) for levels in self.discrete_levels)
        for levels in disc:
            if len(levels) == 0:
                raise ValueError("discrete level list is empty")
            if any(b <= a for a, b in zip(levels, levels[1:])):
                raise ValueError(f"discrete levels must be strictly increasing: {levels}")
        cat = tuple(int(n) for n in self.categorical_levels)
        if any(n < 1 for n in cat):
            raise ValueError(f"categorical level counts must be >= 1: {cat}")
        object.__setattr__(self, "continuous_bounds", bounds)
        object.__setattr__(self, "discrete_levels", disc)
        object.__setattr__(self, "categorical_levels", cat)
        lower = np.array([b[0] for b in bounds], dtype=float)
        upper = np.array([b[1] for b in bounds], dtype=float)
        object.__setattr__(self, "_lower", lower)
        object.__setattr__(self, "_width", upper - lower)

    @property
    def d_c(self) -> int:
        return len(self.continuous_bounds)

    @property
    def d_d(self) -> int:
        return len(self.discrete_levels)

    @property
    def d_q(self) -> int:
        return len(self.categorical_levels)

    @property
    def lower(self) -> np.ndarray:
        return self._lower

    @property
    def upper(self) -> np.ndarray:
        return self._lower + self._width

    @property
    def level_counts(self) -> tuple[int, ...]:
        """Level counts of all non-continuous variables, discrete first."""
        return tuple(len(v) for v in self.discrete_levels) + self.categorical_levels

    def contains(self, p: MixedPoint) -> bool:
        if len(p.continuous) != self.d_c or len(p.discrete) != self.d_d:
            return False
        if len(p.categorical) != self.d_q:
            return False
        x = np.asarray(p.continuous, dtype=float)
        if np.any(x < self.lower) or np.any(x > self.upper):
            return False
        z = p.discrete + p.categorical
        return all(0 <= v < n for v, n in zip(z, self.level_counts))

    def to_dict(self) -> dict:
        return {
            "continuous_bounds": [list(b) for b in self.continuous_bounds],
            "discrete_levels": [list(v) for v in self.discrete_levels],
            "categorical_levels": list(self.categorical_levels),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MixedSpace":
        return cls(
            continuous_bounds=tuple(tuple(b) for b in d.get("continuous_bounds", ())),
            discrete_levels=tuple(tuple(v) for v in d.get("discrete_levels", ())),
            categorical_levels=tuple(d.get("categorical_levels", ())),
        )


class PointSet(Sequence[MixedPoint]):
    """Array-backed batch of points sharing one space.

    ``continuous`` is (N, d_c) float in original units; ``discrete`` and
    ``categorical`` are (N, d_d) and (N, d_q) integer level indices.
    """

    __slots__ = ("continuous", "discrete", "categorical")

    def __init__(self, continuous, discrete=None, categorical=None):
        c = np.asarray(continuous, dtype=float)
        if c.ndim == 1:
            c = c.reshape(-1, 1) if c.size else c.reshape(0, 0)
        n = c.shape[0]
        self.continuous = c
        self.discrete = _as_index_array(discrete, n)
        self.categorical = _as_index_array(categorical, n)
        if not (self.discrete.shape[0] == self.categorical.shape[0] == n):
            raise ValueError("continuous/discrete/categorical row counts differ")

    @classmethod
    def empty(cls, space: MixedSpace) -> "PointSet":
        return cls(
            np.zeros((0, space.d_c)),
            np.zeros((0, space.d_d), dtype=int),
            np.zeros((0, space.d_q), dtype=int),
        )

    @classmethod
    def from_points(cls, points: Iterable[MixedPoint], space: MixedSpace) -> "PointSet":
        points = list(points)
        if not points:
            return cls.empty(space)
        return cls(
            np.array([p.continuous for p in points], dtype=float).reshape(len(points), space.d_c),
            np.array([p.discrete for p in points], dtype=int).reshape(len(points), space.d_d),
            np.array([p.categorical for p in points], dtype=int).reshape(len(points), space.d_q),
        )

    @property
    def levels(self) -> np.ndarray:
        """(N, d_d + d_q) level indices, discrete columns first."""
        return np.hstack([self.discrete, self.categorical])

    def __len__(self) -> int:
        return self.continuous.shape[0]

    def __getitem__(self, idx):
        if isinstance(idx, (int, np.integer)):
            return MixedPoint(
                tuple(self.continuous[idx]),
                tuple(self.discrete[idx]),
                tuple(self.categorical[idx]),
            )
        return self.take(idx)

    def __iter__(self) -> Iterator[MixedPoint]:
        for i in range(len(self)):
            yield self[i]

    def take(self, idx) -> "PointSet":
        return PointSet(self.continuous[idx], self.discrete[idx], self.categorical[idx])

    def concat(self, other: "PointSet") -> "PointSet":
        return PointSet(
            np.vstack([self.continuous, other.continuous]),
            np.vstack([self.discrete, other.discrete]),
            np.vstack([self.categorical, other.categorical]),
        )

    def copy(self) -> "PointSet":
        return PointSet(self.continuous.copy(), self.discrete.copy(), self.categorical.copy())

    def __eq__(self, other):
        if not isinstance(other, PointSet):
            return NotImplemented
        return (
            np.array_equal(self.continuous, other.continuous)
            and np.array_equal(self.discrete, other.discrete)
            and np.array_equal(self.categorical, other.categorical)
        )

    def __repr__(self):
        return f"PointSet(n={len(self)}, d_c={self.continuous.shape[1]})"


def _as_index_array(a, n: int) -> np.ndarray:
    if a is None:
        return np.zeros((n, 0), dtype=int)
    arr = np.asarray(a, dtype=int)
    if arr.ndim == 1:
        arr = arr.reshape(n, -1) if n else arr.reshape(0, 0)
    return arr


def normalize_continuous(space: MixedSpace, x: np.ndarray) -> np.ndarray:
    return (np.asarray(x, dtype=float) - space.lower) / space._width


def denormalize_continuous(space: MixedSpace, u: np.ndarray) -> np.ndarray:
    return space.lower + np.asarray(u, dtype=float) * space._width


def normalize(space: MixedSpace, p: MixedPoint) -> MixedPoint:
    """Map continuous coordinates affinely onto [0, 1]; levels pass through."""
    u = normalize_continuous(space, np.asarray(p.continuous, dtype=float))
    return MixedPoint(tuple(u), p.discrete, p.categorical)


def denormalize(space: MixedSpace, p: MixedPoint) -> MixedPoint:
    x = denormalize_continuous(space, np.asarray(p.continuous, dtype=float))
    return MixedPoint(tuple(x), p.discrete, p.categorical)


def random_levels(space: MixedSpace, m: int, rng: np.random.Generator):
    disc = np.column_stack(
        [rng.integers(0, len(v), size=m) for v in space.discrete_levels]
    ) if space.d_d else np.zeros((m, 0), dtype=int)
    cat = np.column_stack(
        [rng.integers(0, n, size=m) for n in space.categorical_levels]
    ) if space.d_q else np.zeros((m, 0), dtype=int)
    return disc, cat


def lhs_unit(d: int, m: int, rng: np.random.Generator) -> np.ndarray:
    """Latin hypercube in [0, 1)^d: one point per stratum, jittered within it."""
    strata = np.argsort(rng.random((m, d)), axis=0)
    return (strata + rng.random((m, d))) / m


def lhs_sample(space: MixedSpace, m: int, seed) -> PointSet:
    """LHS over the continuous block, independent uniform draws for levels.

    Returns a :class:`PointSet`, which behaves as a sequence of
    :class:`MixedPoint`.
    """
    if m < 1:
        raise ValueError(f"sample size must be >= 1, got {m}")
    rng = np.random.default_rng(seed)
    u = lhs_unit(space.d_c, m, rng)
    disc, cat = random_levels(space, m, rng)
    return PointSet(denormalize_continuous(space, u), disc, cat)


def sobol_points(dim: int, n: int, seed=None, scramble: bool = False) -> np.ndarray:
    """First ``n`` points of the Sobol' sequence in [0, 1]^dim.

    Unscrambled by default, in which case ``seed`` has no effect and the
    sequence starts at the origin.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 1 <= dim <= SOBOL_MAX_DIM:
        raise ValueError(f"Sobol' dimension must be in [1, {SOBOL_MAX_DIM}], got {dim}")
    engine = qmc.Sobol(dim, scramble=scramble, seed=seed)
    with warnings.catch_warnings():
        # balance warning for non power-of-two n is irrelevant here
        warnings.simplefilter("ignore", UserWarning)
        return engine.random(n)
