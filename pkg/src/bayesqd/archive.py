"""Feature-grid archive of feasible elites (minimization)."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .space import MixedPoint, MixedSpace, PointSet

OUT_OF_GRID = None


class InsertOutcome(enum.Enum):
    REJECT_INFEASIBLE = "REJECT_INFEASIBLE"
    REJECT_OUT_OF_GRID = "REJECT_OUT_OF_GRID"
    REJECT_WORSE = "REJECT_WORSE"
    NEW_NICHE = "NEW_NICHE"
    IMPROVED = "IMPROVED"

    @property
    def accepted(self) -> bool:
        return self in (InsertOutcome.NEW_NICHE, InsertOutcome.IMPROVED)


class FeatureGrid:
    """Hyper-rectangular discretization of the feature space.

    Bins are half-open ``[e_i, e_{i+1})`` except the last one per axis, which
    is closed on the right. Features outside ``[e_0, e_last]`` are out of grid.
    """

    def __init__(self, edges: Sequence[Sequence[float]]):
        self.edges = tuple(np.asarray(e, dtype=float) for e in edges)
        for e in self.edges:
            if e.ndim != 1 or e.size < 2:
                raise ValueError("each feature needs at least two edges")
            if np.any(np.diff(e) <= 0):
                raise ValueError(f"edges must be strictly increasing: {e}")

    @property
    def n_features(self) -> int:
        return len(self.edges)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(e.size - 1 for e in self.edges)

    @property
    def n_bins(self) -> int:
        return int(np.prod(self.shape))

    @property
    def lower(self) -> np.ndarray:
        return np.array([e[0] for e in self.edges])

    @property
    def upper(self) -> np.ndarray:
        return np.array([e[-1] for e in self.edges])

    def bin_indices(self, features) -> np.ndarray:
        """Vectorized binning of an (N, n) array; out-of-grid rows are all -1."""
        f = np.atleast_2d(np.asarray(features, dtype=float))
        if f.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {f.shape[1]}")
        idx = np.empty(f.shape, dtype=int)
        outside = np.zeros(f.shape[0], dtype=bool)
        for j, e in enumerate(self.edges):
            col = f[:, j]
            i = np.searchsorted(e, col, side="right") - 1
            i[col == e[-1]] = e.size - 2
            outside |= ~((col >= e[0]) & (col <= e[-1]))
            idx[:, j] = i
        idx[outside] = -1
        return idx

    def bin_center(self, bin_: Sequence[int]) -> np.ndarray:
        return np.array([(e[i] + e[i + 1]) / 2 for e, i in zip(self.edges, bin_)])

    def to_dict(self) -> dict:
        return {"edges": [e.tolist() for e in self.edges]}

    def __eq__(self, other):
        return isinstance(other, FeatureGrid) and len(self.edges) == len(other.edges) and all(
            np.array_equal(a, b) for a, b in zip(self.edges, other.edges)
        )

    def __repr__(self):
        return f"FeatureGrid(shape={self.shape})"


def bin_index(grid: FeatureGrid, features) -> tuple[int, ...] | None:
    """Bin of one feature vector, or ``OUT_OF_GRID`` (None)."""
    idx = grid.bin_indices(np.asarray(features, dtype=float).reshape(1, -1))[0]
    if idx[0] < 0:
        return OUT_OF_GRID
    return tuple(int(i) for i in idx)


@dataclass(frozen=True)
class ArchiveEntry:
    point: MixedPoint
    objective: float
    features: tuple[float, ...]
    constraints: tuple[float, ...]
    bin: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "bin": list(self.bin),
            "point": self.point.to_dict(),
            "objective": self.objective,
            "features": list(self.features),
            "constraints": list(self.constraints),
        }


class Archive:
    """One elite per occupied bin; insertion follows constraint dominance."""

    def __init__(self, grid: FeatureGrid):
        self.grid = grid
        self.cells: dict[tuple[int, ...], ArchiveEntry] = {}

    def __len__(self) -> int:
        return len(self.cells)

    def __iter__(self) -> Iterator[ArchiveEntry]:
        return iter(self.cells.values())

    def __contains__(self, bin_) -> bool:
        return tuple(bin_) in self.cells

    def get(self, bin_) -> ArchiveEntry | None:
        return self.cells.get(tuple(bin_))

    def try_insert(self, point: MixedPoint, objective: float, features, constraints,
                   bin_: tuple[int, ...] | None = ...) -> InsertOutcome:
        """Insert if feasible, in grid, and not worse than the incumbent.

        Ties replace the incumbent. ``bin_`` may be passed when already
        computed; by default it is derived from ``features``.
        """
        constraints = tuple(float(c) for c in np.atleast_1d(constraints))
        if any(c > 0 for c in constraints) or any(np.isnan(constraints)):
            return InsertOutcome.REJECT_INFEASIBLE
        if bin_ is ...:
            bin_ = bin_index(self.grid, features)
        if bin_ is OUT_OF_GRID:
            return InsertOutcome.REJECT_OUT_OF_GRID
        objective = float(objective)
        incumbent = self.cells.get(bin_)
        if incumbent is not None and not incumbent.objective >= objective:
            return InsertOutcome.REJECT_WORSE
        self.cells[bin_] = ArchiveEntry(
            point, objective, tuple(float(f) for f in np.atleast_1d(features)), constraints, bin_
        )
        return InsertOutcome.IMPROVED if incumbent is not None else InsertOutcome.NEW_NICHE

    def insert_batch(self, points: PointSet, objectives, features, constraints) -> list[InsertOutcome]:
        """Insert rows in order; same rules as :meth:`try_insert`."""
        features = np.atleast_2d(np.asarray(features, dtype=float))
        constraints = np.asarray(constraints, dtype=float).reshape(len(points), -1)
        objectives = np.asarray(objectives, dtype=float).ravel()
        bins = self.grid.bin_indices(features)
        feasible = np.all(constraints <= 0, axis=1)
        outcomes = []
        for k in range(len(points)):
            if not feasible[k]:
                outcomes.append(InsertOutcome.REJECT_INFEASIBLE)
                continue
            if bins[k, 0] < 0:
                outcomes.append(InsertOutcome.REJECT_OUT_OF_GRID)
                continue
            b = tuple(int(i) for i in bins[k])
            incumbent = self.cells.get(b)
            if incumbent is not None and not incumbent.objective >= objectives[k]:
                outcomes.append(InsertOutcome.REJECT_WORSE)
                continue
            self.cells[b] = ArchiveEntry(
                points[k], float(objectives[k]), tuple(features[k].tolist()),
                tuple(constraints[k].tolist()), b,
            )
            outcomes.append(InsertOutcome.IMPROVED if incumbent is not None else InsertOutcome.NEW_NICHE)
        return outcomes

    def qd_score(self) -> float:
        return float(sum(e.objective for e in self.cells.values()))

    def niche_count(self) -> int:
        return len(self.cells)

    def genomes(self, space: MixedSpace) -> PointSet:
        return PointSet.from_points((e.point for e in self.cells.values()), space)

    def copy(self) -> "Archive":
        new = Archive(self.grid)
        new.cells = dict(self.cells)
        return new

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "qd_score": self.qd_score(),
            "niche_count": self.niche_count(),
            "cells": [self.cells[b].to_dict() for b in sorted(self.cells)],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, d: dict) -> "Archive":
        archive = cls(FeatureGrid(d["grid"]["edges"]))
        for c in d["cells"]:
            p = c["point"]
            entry = ArchiveEntry(
                MixedPoint(p["continuous"], p["discrete"], p["categorical"]),
                float(c["objective"]), tuple(c["features"]), tuple(c["constraints"]), tuple(c["bin"]),
            )
            archive.cells[entry.bin] = entry
        return archive

    def __eq__(self, other):
        return isinstance(other, Archive) and self.grid == other.grid and self.cells == other.cells


def qd_score(archive: Archive) -> float:
    return archive.qd_score()


def niche_count(archive: Archive) -> int:
    return archive.niche_count()


def normalized_qd_score(archive: Archive) -> float:
    """qd_score divided by the total number of bins of the grid."""
    return archive.qd_score() / archive.grid.n_bins
