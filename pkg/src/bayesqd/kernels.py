"""Product covariance for mixed continuous / discrete / categorical inputs.

The kernel is a single process variance times one factor per variable:
squared-exponential factors on continuous coordinates and a level
correlation matrix lookup on every discrete or categorical coordinate. Level
correlations come either from the compound-symmetry (Gower) kernel, one
``theta`` per variable, or from the hypersphere decomposition, one angle per
pair of levels.

Continuous coordinates are expected on the unit scale (see
:func:`bayesqd.space.normalize_continuous`); the GP module handles that.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .space import MixedPoint, MixedSpace, PointSet, normalize_continuous

NUGGET = 1e-6


class KernelMode(str, enum.Enum):
    GOWER = "GOWER"
    HYPERSPHERE = "HYPERSPHERE"


def n_angles(level_count: int) -> int:
    return level_count * (level_count - 1) // 2


@dataclass
class KernelHyperparams:
    """Hyperparameters of the mixed product kernel.

    Exactly one of ``gower_thetas`` / ``sphere_angles`` is set when the space
    has discrete or categorical variables; both may be None otherwise.
    """

    amplitude: float
    cont_lengthscales: np.ndarray
    gower_thetas: np.ndarray | None = None
    sphere_angles: list[np.ndarray] | None = None
    noise_variance: float = 0.0

    def __post_init__(self):
        self.cont_lengthscales = np.atleast_1d(np.asarray(self.cont_lengthscales, dtype=float))
        if self.gower_thetas is not None:
            self.gower_thetas = np.atleast_1d(np.asarray(self.gower_thetas, dtype=float))
        if self.sphere_angles is not None:
            self.sphere_angles = [np.atleast_1d(np.asarray(a, dtype=float)) for a in self.sphere_angles]
        if self.gower_thetas is not None and self.sphere_angles is not None:
            raise ValueError("set either gower_thetas or sphere_angles, not both")
        if not self.amplitude > 0:
            raise ValueError(f"amplitude must be positive, got {self.amplitude}")
        if np.any(self.cont_lengthscales <= 0):
            raise ValueError("lengthscales must be positive")
        if self.gower_thetas is not None and np.any(self.gower_thetas < 0):
            raise ValueError("Gower thetas must be nonnegative")
        if self.noise_variance < 0:
            raise ValueError("noise variance must be nonnegative")

    @property
    def mode(self) -> KernelMode | None:
        if self.gower_thetas is not None:
            return KernelMode.GOWER
        if self.sphere_angles is not None:
            return KernelMode.HYPERSPHERE
        return None

    def check_space(self, space: MixedSpace) -> None:
        if self.cont_lengthscales.size != space.d_c:
            raise ValueError(
                f"{self.cont_lengthscales.size} lengthscales for {space.d_c} continuous dims"
            )
        counts = space.level_counts
        if self.gower_thetas is not None and self.gower_thetas.size != len(counts):
            raise ValueError(f"{self.gower_thetas.size} thetas for {len(counts)} level variables")
        if self.sphere_angles is not None:
            if len(self.sphere_angles) != len(counts):
                raise ValueError("one angle vector per level variable is required")
            for a, n in zip(self.sphere_angles, counts):
                if a.size != n_angles(n):
                    raise ValueError(f"{a.size} angles for a {n}-level variable")
        if counts and self.mode is None:
            raise ValueError("space has level variables but no level kernel parameters")

    def to_dict(self) -> dict:
        return {
            "amplitude": float(self.amplitude),
            "cont_lengthscales": self.cont_lengthscales.tolist(),
            "gower_thetas": None if self.gower_thetas is None else self.gower_thetas.tolist(),
            "sphere_angles": None if self.sphere_angles is None else [a.tolist() for a in self.sphere_angles],
            "noise_variance": float(self.noise_variance),
        }


def se_kernel_1d(x: float, x2: float, lengthscale: float) -> float:
    return float(np.exp(-((x - x2) ** 2) / (2.0 * lengthscale**2)))


def gower_kernel_1d(z: int, z2: int, theta: float) -> float:
    return 1.0 if z == z2 else float(np.exp(-theta))


def hypersphere_lower(level_count: int, angles) -> np.ndarray:
    """Lower-triangular factor whose rows are unit vectors in polyspherical form.

    ``angles`` is ordered row by row: (2,1), (3,1), (3,2), (4,1), ...
    """
    angles = np.asarray(angles, dtype=float).ravel()
    if angles.size != n_angles(level_count):
        raise ValueError(f"expected {n_angles(level_count)} angles, got {angles.size}")
    if np.any(angles < 0) or np.any(angles > np.pi / 2):
        raise ValueError("hypersphere angles must lie in [0, pi/2]")
    L = np.zeros((level_count, level_count))
    L[0, 0] = 1.0
    pos = 0
    for m in range(1, level_count):
        theta = angles[pos:pos + m]
        pos += m
        sin_prod = 1.0
        for j in range(m):
            L[m, j] = np.cos(theta[j]) * sin_prod
            sin_prod *= np.sin(theta[j])
        L[m, m] = sin_prod
    return L


def hypersphere_corr_matrix(level_count: int, angles) -> np.ndarray:
    L = hypersphere_lower(level_count, angles)
    C = L @ L.T
    np.fill_diagonal(C, 1.0)
    return C


def gower_corr_matrix(level_count: int, theta: float) -> np.ndarray:
    C = np.full((level_count, level_count), np.exp(-theta))
    np.fill_diagonal(C, 1.0)
    return C


def level_corr_matrices(hp: KernelHyperparams, level_counts: Sequence[int]) -> list[np.ndarray]:
    if hp.gower_thetas is not None:
        return [gower_corr_matrix(n, t) for n, t in zip(level_counts, hp.gower_thetas)]
    if hp.sphere_angles is not None:
        return [hypersphere_corr_matrix(n, a) for n, a in zip(level_counts, hp.sphere_angles)]
    return []


def cross_correlation(u_a, z_a, u_b, z_b, lengthscales, level_mats) -> np.ndarray:
    """Correlation block R[i, j] between two batches (unit-scale continuous)."""
    u_a = np.asarray(u_a, dtype=float)
    u_b = np.asarray(u_b, dtype=float)
    if u_a.shape[1]:
        scaled_a = u_a / lengthscales
        scaled_b = u_b / lengthscales
        sq = (
            np.sum(scaled_a**2, axis=1)[:, None]
            + np.sum(scaled_b**2, axis=1)[None, :]
            - 2.0 * scaled_a @ scaled_b.T
        )
        R = np.exp(-0.5 * np.maximum(sq, 0.0))
    else:
        R = np.ones((u_a.shape[0], u_b.shape[0]))
    for k, C in enumerate(level_mats):
        R *= C[z_a[:, k][:, None], z_b[:, k][None, :]]
    return R


def product_kernel(p: MixedPoint, p2: MixedPoint, hp: KernelHyperparams, space: MixedSpace) -> float:
    """Covariance between two points of ``space`` (continuous in original units)."""
    hp.check_space(space)
    for q in (p, p2):
        if (len(q.continuous), len(q.discrete), len(q.categorical)) != (space.d_c, space.d_d, space.d_q):
            raise ValueError("point dimensions do not match the space")
    u = normalize_continuous(space, np.array([p.continuous, p2.continuous]).reshape(2, space.d_c))
    value = hp.amplitude
    for k in range(space.d_c):
        value *= se_kernel_1d(u[0, k], u[1, k], hp.cont_lengthscales[k])
    z = p.discrete + p.categorical
    z2 = p2.discrete + p2.categorical
    for k, C in enumerate(level_corr_matrices(hp, space.level_counts)):
        value *= C[z[k], z2[k]]
    return float(value)


def kernel_matrix(points: PointSet, hp: KernelHyperparams, space: MixedSpace, nugget: float = NUGGET) -> np.ndarray:
    """Covariance matrix of ``points`` with noise and nugget on the diagonal.

    The nugget is relative to the process variance, so a single point with
    unit amplitude gives ``1 + nugget``.
    """
    if len(points) == 0:
        raise ValueError("kernel_matrix needs at least one point")
    hp.check_space(space)
    u = normalize_continuous(space, points.continuous)
    z = points.levels
    R = cross_correlation(u, z, u, z, hp.cont_lengthscales, level_corr_matrices(hp, space.level_counts))
    R = 0.5 * (R + R.T)
    K = hp.amplitude * R
    K[np.diag_indices_from(K)] += hp.noise_variance + nugget * hp.amplitude
    return K


class PairwiseCache:
    """Training-set quantities that do not depend on hyperparameters.

    Only the strict upper triangle of each pairwise array is kept, flattened,
    so that a correlation matrix costs one matrix-vector product and one
    ``exp`` over M(M-1)/2 entries.
    """

    def __init__(self, u: np.ndarray, z: np.ndarray, level_counts):
        u = np.asarray(u, dtype=float)
        z = np.asarray(z, dtype=int)
        self.M = u.shape[0]
        self.level_counts = tuple(level_counts)
        self.levels = z
        self.iu = np.triu_indices(self.M, k=1)
        i, j = self.iu
        self.sq_dists = (u[i] - u[j]).T ** 2  # (d_c, P)
        self.mismatch = (z[i] != z[j]).T.astype(float)  # (d_z, P)
        self.stacked = np.vstack([self.sq_dists, self.mismatch])
        self.zi = z[i]
        self.zj = z[j]

    @classmethod
    def build(cls, u, z, level_counts) -> "PairwiseCache":
        return cls(u, z, level_counts)

    def _square(self, upper: np.ndarray) -> np.ndarray:
        R = np.empty((self.M, self.M))
        R[self.iu] = upper
        R.T[self.iu] = upper
        np.fill_diagonal(R, 1.0)
        return R

    def correlation(self, lengthscales, gower_thetas=None, level_mats=None) -> np.ndarray:
        w_c = 0.5 / np.asarray(lengthscales, dtype=float) ** 2
        if gower_thetas is not None:
            expo = np.concatenate([w_c, np.asarray(gower_thetas, dtype=float)]) @ self.stacked
        else:
            expo = w_c @ self.sq_dists if w_c.size else np.zeros(self.iu[0].size)
        upper = np.exp(-expo)
        if level_mats is not None:
            for k, C in enumerate(level_mats):
                upper *= C[self.zi[:, k], self.zj[:, k]]
        return self._square(upper)
