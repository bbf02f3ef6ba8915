"""Analytical constrained QD test problems with categorical coefficient tables.

Three problems: a modified Rosenbrock (2 continuous, 6x2 categorical), a
modified Trid (4 continuous, 3x2 categorical) and a modified
Styblinski-Tang (6 continuous, 2x2x2 categorical). Each categorical tuple
selects a row of named coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .archive import FeatureGrid
from .problem import QdProblem
from .space import MixedSpace, PointSet


@dataclass(frozen=True)
class CoefficientTable:
    columns: tuple[str, ...]
    rows: dict  # level tuple -> tuple of floats, in column order
    level_counts: tuple[int, ...]

    def __post_init__(self):
        expected = int(np.prod(self.level_counts))
        if len(self.rows) != expected:
            raise ValueError(f"{len(self.rows)} rows for {expected} level combinations")
        for key, vals in self.rows.items():
            if len(vals) != len(self.columns):
                raise ValueError(f"row {key} has {len(vals)} values for {len(self.columns)} columns")
        dense = np.full(tuple(self.level_counts) + (len(self.columns),), np.nan)
        for key, vals in self.rows.items():
            dense[key] = vals
        if np.isnan(dense).any():
            raise ValueError("table does not cover every level combination")
        object.__setattr__(self, "_dense", dense)

    def lookup(self, levels) -> dict[str, np.ndarray]:
        """Coefficient columns for an (N, d_q) array of level indices."""
        levels = np.asarray(levels, dtype=int)
        vals = self._dense[tuple(levels.T)]
        return {name: vals[:, i] for i, name in enumerate(self.columns)}

    def row(self, key) -> dict[str, float]:
        return dict(zip(self.columns, self.rows[tuple(key)]))


ROSENBROCK_TABLE = CoefficientTable(
    columns=("a", "b", "e", "f", "j", "k", "r", "s", "t", "u", "v"),
    rows={
        (0, 0): (100, 1, 0.7, 2000, 1, 0, 1, -1.2, 0, 0, -1),
        (0, 1): (103, 1.6, 0.2, 1950, -1, 0, 1, -0.2, 0, 0, 0.97),
        (1, 0): (98, 2, 0.3, 2100, 1, 0, 1, -0.7, 0, 0, 0.95),
        (1, 1): (100, 1.7, 0.5, 2020, 1, 0, 1, 0.15, 0, 0, 1.1),
        (2, 0): (95, 4.7, 1.5, 1970, 1, 0.15, 2, 0, 0.5, 0, -0.8),
        (2, 1): (97, 2.4, 1.2, 2100, 1, -0.55, 2, 0.4, 0, -0.8, 0.7),
        (3, 0): (103, 1.7, 2.5, 2070, -1, -1.15, 2, 0, -1.5, 0, 1.8),
        (3, 1): (100, 0.2, 1, 1890, 1, -1.3, 2, 1.4, 0, 0.8, -1.7),
        (4, 0): (96, 1.1, 0.5, 2140, -1, 0.5, 2, 0, -2.3, 0, -0.8),
        (4, 1): (104, 1.5, 2, 1930, -1, 1.4, 2, -2.4, 0, 1.8, -0.8),
        (5, 0): (99, 1.1, 0.5, 2140, 1, -1.5, 2, 0, 2, 0, -0.9),
        (5, 1): (104, 1.5, 2, 2030, 1, 1.8, 2, 0.4, 0, 1, -0.3),
    },
    level_counts=(6, 2),
)

TRID_TABLE = CoefficientTable(
    columns=("a", "b", "c", "e", "f", "j", "k", "r", "s", "t", "u"),
    rows={
        (0, 0): (1, 1, 1, 1, 1, 0.7, 1, 1, 1.5, 1, 0.4),
        (1, 0): (0.95, 1, 1.1, 0.8, 1, 0.4, 1.1, 1, 1.9, 1, 0.1),
        (2, 0): (1, 1.3, 0.97, 1.1, 0.8, 0.1, 1, 0.9, 1.5, 1.1, 0.4),
        (0, 1): (1.1, 0.7, 1, 1, 1, 0.7, 1, 1, 0.7, 1, 1.4),
        (1, 1): (0.7, 0.5, 0.4, 1.5, 1, 1.7, 0.7, 0.7, 0.5, 1, 0.9),
        (2, 1): (0.7, 1, 1.5, 1, 1.3, 0.91, 1, 1, 1.5, 0.7, 0.1),
    },
    level_counts=(3, 2),
)

STYBLINSKI_TABLE = CoefficientTable(
    columns=("a", "b", "c", "e", "f", "j", "k"),
    rows={
        (0, 0, 0): (1, 16, 5, 1.2, 0.7, 3.5, 0.7),
        (1, 0, 0): (1.1, 18, 6.1, 1.4, 0.9, 3.8, 0.2),
        (1, 1, 0): (0.95, 17, 4.9, 1.7, 1.3, 2.8, 0.7),
        (0, 1, 0): (0.94, 12, 6.9, 1.4, 0.2, 1.4, 0.2),
        (0, 0, 1): (0.75, 10, 7, 2.2, 1.7, 1.5, 0.5),
        (1, 0, 1): (1.2, 19, 4.2, 1.5, 2.9, 1.4, 1.2),
        (1, 1, 1): (0.97, 12, 1.9, 0.7, 2.3, 3.8, 0.4),
        (0, 1, 1): (1.1, 18, 4.2, 1.9, 0.7, 2.7, 0.4),
    },
    level_counts=(2, 2, 2),
)


def rosenbrock_evaluate(points: PointSet):
    x = points.continuous
    c = ROSENBROCK_TABLE.lookup(points.categorical)
    x1, x2 = x[:, 0], x[:, 1]
    num = np.zeros(len(points))
    for i in range(x.shape[1] - 1):
        num += c["a"] * (x[:, i + 1] - x[:, i] ** 2) ** 2 + c["b"] * (c["e"] - x[:, i + 1]) ** 2
    obj = -num / c["f"]
    d1 = x1 - c["k"]
    # exponent r is 1 or 2 in the table
    ft1 = c["j"] * np.where(c["r"] == 1, d1, d1 * d1) + c["s"]
    ft2 = c["v"] * (x2 - c["t"]) ** 2 + c["u"]
    g1 = ((x1 - 0.5) ** 2 + x2 - 5.6) / 10.0
    return obj, np.column_stack([ft1, ft2]), g1[:, None]


def trid_evaluate(points: PointSet):
    x = points.continuous
    c = TRID_TABLE.lookup(points.categorical)
    obj = np.sum(c["a"][:, None] * (x - c["b"][:, None]) ** 2, axis=1)
    obj -= np.sum(c["c"][:, None] * x[:, 1:] * x[:, :-1], axis=1)
    x1, x2, x3, x4 = x.T
    ft1 = c["e"] * x3 + (c["f"] * x1 - c["j"]) ** 2 + c["k"] * x2
    ft2 = c["r"] * x2 - c["s"] + (c["t"] * x4 * x3 - c["u"]) ** 2
    g1 = (x1 - 0.4) ** 2 + 1.5 * x3 - 1.3
    return obj, np.column_stack([ft1, ft2]), g1[:, None]


def styblinski_evaluate(points: PointSet):
    x = points.continuous
    c = STYBLINSKI_TABLE.lookup(points.categorical)
    a, b, cc = (c[k][:, None] for k in ("a", "b", "c"))
    obj = np.sum(a * x**4 - b * x**2 + cc * x, axis=1)
    x1, x2, x3, x4, x5, x6 = x.T
    ft1 = (x3 - c["e"]) ** 2 + (x5 - c["f"]) ** 2
    ft2 = x2 + c["j"] + (x4 - c["k"]) ** 2
    g = np.column_stack([x1 + x2 - 1.0, x4 + x6 - 2.0])
    return obj, np.column_stack([ft1, ft2]), g


def rosenbrock_suite() -> QdProblem:
    space = MixedSpace(continuous_bounds=((-5, 5),) * 2, categorical_levels=(6, 2))
    grid = FeatureGrid([np.arange(-50, 51, 10), np.arange(-50, 81, 10)])
    return QdProblem(space, grid, rosenbrock_evaluate, 2, 1, name="rosenbrock")


def trid_suite() -> QdProblem:
    space = MixedSpace(continuous_bounds=((0, 1),) * 4, categorical_levels=(3, 2))
    grid = FeatureGrid([[-1.5, -0.5, 0.5, 1.5, 2.5, 3.5, 4.5], [-2.5, -1.5, -0.5, 0.5, 1.5, 2.5]])
    return QdProblem(space, grid, trid_evaluate, 2, 1, name="trid")


def styblinski_suite() -> QdProblem:
    space = MixedSpace(continuous_bounds=((0, 1),) * 6, categorical_levels=(2, 2, 2))
    grid = FeatureGrid([[0, 2, 4, 6, 8, 10, 12], [-5, -3, -1, 1, 3, 5]])
    return QdProblem(space, grid, styblinski_evaluate, 2, 2, name="styblinski")


SUITES: dict[str, Callable[[], QdProblem]] = {
    "rosenbrock": rosenbrock_suite,
    "trid": trid_suite,
    "styblinski": styblinski_suite,
}


def get_suite(name: str) -> QdProblem:
    try:
        return SUITES[name]()
    except KeyError:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}") from None
