"""Ordinary-kriging Gaussian process over a mixed space.

Training minimizes the negative log marginal likelihood with COBYLA from
quasi-random multistarts. Outputs are standardized before training; the
constant mean is the generalized-least-squares estimate and the process
variance is profiled out in closed form (clipped to its bounds), so the
optimizer only searches correlation parameters.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.linalg import lapack
from scipy.optimize import minimize

from .kernels import (
    NUGGET,
    KernelHyperparams,
    KernelMode,
    PairwiseCache,
    cross_correlation,
    kernel_matrix,
    level_corr_matrices,
    hypersphere_corr_matrix,
    n_angles,
)
from .space import MixedPoint, MixedSpace, PointSet, lhs_unit, normalize_continuous

logger = logging.getLogger(__name__)

LOG_2PI = float(np.log(2.0 * np.pi))

LENGTHSCALE_BOUNDS = (1e-2, 1e2)
AMPLITUDE_BOUNDS = (1e-3, 1e3)
THETA_BOUNDS = (1e-2, 1e2)
ANGLE_BOUNDS = (0.0, np.pi / 2)

N_RESTARTS = 20


class GpFitError(RuntimeError):
    pass


def neg_log_marginal_likelihood(
    inputs: PointSet,
    outputs,
    hp: KernelHyperparams,
    mean: float,
    space: MixedSpace,
    nugget: float = NUGGET,
) -> float:
    """Gaussian NLML of ``outputs`` under constant ``mean`` and covariance ``hp``.

    Raises ``numpy.linalg.LinAlgError`` if the covariance is not positive
    definite.
    """
    y = np.asarray(outputs, dtype=float).ravel()
    K = kernel_matrix(inputs, hp, space, nugget=nugget)
    chol = np.linalg.cholesky(K)
    r = linalg.solve_triangular(chol, y - mean, lower=True)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return 0.5 * (logdet + r @ r + y.size * LOG_2PI)


@dataclass(frozen=True)
class GpModel:
    space: MixedSpace
    train_inputs: PointSet
    train_outputs: np.ndarray
    y_offset: float
    y_scale: float
    hp: KernelHyperparams
    mean: float
    chol: np.ndarray
    alpha: np.ndarray
    nugget: float = NUGGET
    nlml: float = float("nan")
    degenerate: bool = False

    @property
    def amplitude(self) -> float:
        return self.hp.amplitude

    def predict(self, p: MixedPoint) -> tuple[float, float]:
        m, s = self.predict_batch(PointSet.from_points([p], self.space))
        return float(m[0]), float(s[0])

    def predict_batch(self, points: PointSet) -> tuple[np.ndarray, np.ndarray]:
        """De-standardized posterior means and standard deviations."""
        n = len(points)
        if self.degenerate:
            return (
                np.full(n, self.y_offset),
                np.full(n, np.sqrt(self.hp.amplitude) * self.y_scale),
            )
        u = normalize_continuous(self.space, points.continuous)
        k = self.hp.amplitude * cross_correlation(
            u, points.levels, self._u_train, self._z_train,
            self.hp.cont_lengthscales, self._level_mats,
        )
        mu = self.mean + k @ self.alpha
        v = linalg.solve_triangular(self.chol, k.T, lower=True, check_finite=False)
        var = self.hp.amplitude - np.einsum("ij,ij->j", v, v)
        sd = np.sqrt(np.maximum(var, 0.0))
        return self.y_offset + self.y_scale * mu, self.y_scale * sd

    # training-side arrays reused by every prediction; set by _finalize
    _u_train: np.ndarray = field(default=None, init=False, repr=False, compare=False)
    _z_train: np.ndarray = field(default=None, init=False, repr=False, compare=False)
    _level_mats: tuple = field(default=(), init=False, repr=False, compare=False)


def _finalize(model: GpModel) -> GpModel:
    object.__setattr__(model, "_u_train", normalize_continuous(model.space, model.train_inputs.continuous))
    object.__setattr__(model, "_z_train", model.train_inputs.levels)
    object.__setattr__(model, "_level_mats", tuple(level_corr_matrices(model.hp, model.space.level_counts)))
    return model


class _ParamMap:
    """Maps a point of the unit box [0, 1]^P to correlation hyperparameters."""

    def __init__(self, space: MixedSpace, mode: KernelMode):
        self.space = space
        self.mode = mode
        self.counts = space.level_counts
        self.d_c = space.d_c
        if not self.counts:
            self.n_level = 0
        elif mode is KernelMode.GOWER:
            self.n_level = len(self.counts)
        else:
            self.n_level = sum(n_angles(n) for n in self.counts)
        self.size = self.d_c + self.n_level
        lo, hi = np.log(LENGTHSCALE_BOUNDS)
        self._ls = (lo, hi - lo)
        lo, hi = np.log(THETA_BOUNDS)
        self._th = (lo, hi - lo)

    def lengthscales(self, x):
        return np.exp(self._ls[0] + self._ls[1] * x[: self.d_c])

    def level_params(self, x):
        w = x[self.d_c:]
        if not self.counts:
            return None, None
        if self.mode is KernelMode.GOWER:
            return np.exp(self._th[0] + self._th[1] * w), None
        angles, pos = [], 0
        for n in self.counts:
            angles.append(np.clip(w[pos:pos + n_angles(n)], 0.0, 1.0) * ANGLE_BOUNDS[1])
            pos += n_angles(n)
        return None, angles

    def hyperparams(self, x, amplitude: float) -> KernelHyperparams:
        thetas, angles = self.level_params(x)
        return KernelHyperparams(
            amplitude=amplitude,
            cont_lengthscales=self.lengthscales(x),
            gower_thetas=thetas,
            sphere_angles=angles,
        )


def _profiled(R: np.ndarray, y: np.ndarray, nugget: float):
    """GLS mean, clipped profiled amplitude, NLML, and factors for one R.

    ``R`` is overwritten.
    """
    M = y.size
    R[np.diag_indices_from(R)] += nugget
    chol, info = lapack.dpotrf(R, lower=True, clean=True, overwrite_a=True)
    if info != 0:
        raise np.linalg.LinAlgError(f"correlation matrix not positive definite (info={info})")
    ones_w = linalg.solve_triangular(chol, np.ones(M), lower=True, check_finite=False)
    y_w = linalg.solve_triangular(chol, y, lower=True, check_finite=False)
    mu = float(ones_w @ y_w / (ones_w @ ones_w))
    r_w = y_w - mu * ones_w
    quad = float(r_w @ r_w)
    amp = float(np.clip(quad / M, *AMPLITUDE_BOUNDS))
    logdet_R = 2.0 * float(np.sum(np.log(np.diag(chol))))
    nlml = 0.5 * (M * np.log(amp) + logdet_R + quad / amp + M * LOG_2PI)
    return nlml, mu, amp, chol


def multistart_points(n_params: int, n_restarts: int, seed) -> np.ndarray:
    """Restart locations in the unit parameter box (LHS, deterministic in seed)."""
    return lhs_unit(n_params, n_restarts, np.random.default_rng(seed))


def fit(
    space: MixedSpace,
    inputs: PointSet,
    outputs,
    kernel_mode: KernelMode | str = KernelMode.GOWER,
    seed=0,
    n_restarts: int = N_RESTARTS,
    maxiter: int | None = None,
    nugget: float = NUGGET,
) -> GpModel:
    """Train a GP on ``(inputs, outputs)``.

    Each restart runs COBYLA in the unit box of correlation parameters from an
    LHS start; the restart with the lowest NLML wins. Constant outputs yield a
    degenerate model that returns the constant.
    """
    kernel_mode = KernelMode(kernel_mode)
    y_raw = np.asarray(outputs, dtype=float).ravel()
    M = y_raw.size
    if M != len(inputs):
        raise ValueError(f"{len(inputs)} inputs but {M} outputs")
    if M < 1:
        raise ValueError("fit needs at least one training point")
    pmap = _ParamMap(space, kernel_mode)
    offset = float(np.mean(y_raw))
    scale = float(np.std(y_raw))
    if M < 2 or not scale > 0 or not np.all(np.isfinite(y_raw)):
        if not np.all(np.isfinite(y_raw)):
            raise GpFitError("non-finite training outputs")
        hp = pmap.hyperparams(np.full(pmap.size, 0.5), AMPLITUDE_BOUNDS[0])
        return _finalize(GpModel(
            space, inputs, y_raw, offset, 1.0, hp, 0.0,
            np.zeros((M, M)), np.zeros(M), nugget, float("nan"), degenerate=True,
        ))
    y = (y_raw - offset) / scale

    u = normalize_continuous(space, inputs.continuous)
    cache = PairwiseCache.build(u, inputs.levels, space.level_counts)

    def correlation(x):
        thetas, angles = pmap.level_params(x)
        mats = None
        if angles is not None:
            mats = [hypersphere_corr_matrix(n, a) for n, a in zip(pmap.counts, angles)]
        return cache.correlation(pmap.lengthscales(x), gower_thetas=thetas, level_mats=mats)

    P = pmap.size
    if maxiter is None:
        maxiter = 30 * (P + 1)
    starts = multistart_points(P, n_restarts, seed)

    best = (np.inf, None)
    for x0 in starts:
        seen = [np.inf, None]

        def objective(x):
            xc = np.clip(x, 0.0, 1.0)
            try:
                val = _profiled(correlation(xc), y, nugget)[0]
            except (np.linalg.LinAlgError, ValueError):
                return 1e10
            if not np.isfinite(val):
                return 1e10
            if val < seen[0]:
                seen[0], seen[1] = val, xc.copy()
            return val

        try:
            minimize(
                objective, x0, method="COBYLA",
                bounds=[(0.0, 1.0)] * P,
                options={"maxiter": maxiter, "rhobeg": 0.2, "tol": 1e-2},
            )
        except (np.linalg.LinAlgError, ValueError) as exc:  # pragma: no cover
            logger.debug("restart failed: %s", exc)
        if seen[1] is not None and seen[0] < best[0]:
            best = (seen[0], seen[1])

    if best[1] is None:
        raise GpFitError("every multistart failed to factorize the covariance")
    x = best[1]
    nlml, mu, amp, chol_R = _profiled(correlation(x), y, nugget)
    hp = pmap.hyperparams(x, amp)
    chol = np.sqrt(amp) * chol_R
    alpha = linalg.cho_solve((chol, True), y - mu, check_finite=False)
    return _finalize(GpModel(space, inputs, y_raw, offset, scale, hp, mu, chol, alpha, nugget, nlml))


def fit_with_hyperparams(
    space: MixedSpace,
    inputs: PointSet,
    outputs,
    hp: KernelHyperparams,
    mean: float | None = None,
    standardize: bool = False,
    nugget: float = NUGGET,
) -> GpModel:
    """Condition a GP on data with fixed hyperparameters (no training).

    With ``mean=None`` the GLS constant mean is used.
    """
    y_raw = np.asarray(outputs, dtype=float).ravel()
    offset, scale = 0.0, 1.0
    if standardize and y_raw.size > 1 and np.std(y_raw) > 0:
        offset, scale = float(np.mean(y_raw)), float(np.std(y_raw))
    y = (y_raw - offset) / scale
    K = kernel_matrix(inputs, hp, space, nugget=nugget)
    chol = np.linalg.cholesky(K)
    if mean is None:
        ones_w = linalg.solve_triangular(chol, np.ones(y.size), lower=True)
        y_w = linalg.solve_triangular(chol, y, lower=True)
        mean = float(ones_w @ y_w / (ones_w @ ones_w))
    alpha = linalg.cho_solve((chol, True), y - mean)
    nlml = neg_log_marginal_likelihood(inputs, y, hp, mean, space, nugget)
    return _finalize(GpModel(space, inputs, y_raw, offset, scale, hp, float(mean), chol, alpha, nugget, nlml))
