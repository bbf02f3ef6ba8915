"""Constrained QD problem: objective, features and constraints over a space."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .archive import FeatureGrid
from .space import MixedPoint, MixedSpace, PointSet

# (points) -> (objective (N,), features (N, n), constraints (N, n_g))
BatchEvaluator = Callable[[PointSet], tuple[np.ndarray, np.ndarray, np.ndarray]]


@dataclass
class QdProblem:
    """Batch evaluator bundled with its space and feature grid.

    ``evaluate`` must be deterministic and return arrays shaped (N,), (N, n)
    and (N, n_g) for N input points.
    """

    space: MixedSpace
    grid: FeatureGrid
    evaluate: BatchEvaluator
    n_features: int
    n_constraints: int
    name: str = ""

    def __post_init__(self):
        if self.grid.n_features != self.n_features:
            raise ValueError("grid dimension does not match the number of features")

    def evaluate_checked(self, points: PointSet):
        y, f, g = self.evaluate(points)
        n = len(points)
        y = np.asarray(y, dtype=float).reshape(n)
        f = np.asarray(f, dtype=float).reshape(n, self.n_features)
        g = np.asarray(g, dtype=float).reshape(n, self.n_constraints)
        return y, f, g

    def _one(self, p: MixedPoint):
        return self.evaluate_checked(PointSet.from_points([p], self.space))

    def objective(self, p: MixedPoint) -> float:
        return float(self._one(p)[0][0])

    def features(self, p: MixedPoint) -> np.ndarray:
        return self._one(p)[1][0]

    def constraints(self, p: MixedPoint) -> np.ndarray:
        return self._one(p)[2][0]


class CountingProblem(QdProblem):
    """Wraps a problem and counts evaluated points."""

    def __init__(self, inner: QdProblem):
        self.inner = inner
        self.calls = 0

        def evaluate(points):
            self.calls += len(points)
            return inner.evaluate(points)

        super().__init__(inner.space, inner.grid, evaluate, inner.n_features, inner.n_constraints, inner.name)
