"""Soft-margin SVM with the Gaussian kernel exp(-sigma |a - b|^2).

Training solves the dual by SMO (see :mod:`envelope_learn._kernels`).
Cost-sensitive training widens the box of the minority (-1) class to
``C * minority_factor``, where the factor is ``r * f``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import (
    DataError, LabeledDataset, ScaleParams, UNSTABLE, sign, sign_array,
    standardize_apply, standardize_fit,
)

log = logging.getLogger(__name__)

SV_THRESHOLD = 1e-8
FEASIBILITY_TOL = 1e-6
DEFAULT_CACHE_BYTES = 256 * 2**20


class SmoNotConverged(ArithmeticError):
    """Raised when SMO hits its iteration cap; carries the best iterate."""

    def __init__(self, message, alpha=None, gap=None, iterations=None):
        super().__init__(message)
        self.alpha = alpha
        self.gap = gap
        self.iterations = iterations


class SmoMonotonicityError(ArithmeticError):
    pass


def rbf_kernel(a, b, sigma: float) -> float:
    if not sigma > 0:
        raise DataError("sigma must be > 0")
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DataError("kernel arguments differ in dimension")
    d = a - b
    return math.exp(-sigma * float(d @ d))


@dataclass(frozen=True)
class KernelParams:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise DataError("sigma must be > 0")


@dataclass(frozen=True)
class SvmConfig:
    C: float = 1.0
    sigma: float = 1.0
    minority_factor: float = 1.0
    kkt_tol: float = 1e-3
    max_passes: int = 10_000_000
    cache_bytes: int = DEFAULT_CACHE_BYTES

    def __post_init__(self):
        if not self.C > 0:
            raise DataError("C must be > 0")
        if not self.sigma > 0:
            raise DataError("sigma must be > 0")
        if not self.minority_factor > 0:
            raise DataError("minority factor must be > 0")
        if not self.kkt_tol > 0:
            raise DataError("kkt_tol must be > 0")

    def upper_bounds(self, y: np.ndarray) -> np.ndarray:
        return np.where(np.asarray(y) == UNSTABLE, self.C * self.minority_factor, self.C)


@dataclass(frozen=True)
class SvmModel:
    support_vectors: np.ndarray  # standardized, n_sv x n
    coefficients: np.ndarray  # alpha_i * y_i
    bias: float
    kernel: KernelParams
    scale: ScaleParams
    iterations: int = 0

    kind = "svm"

    @property
    def n(self) -> int:
        return self.scale.n

    @property
    def n_sv(self) -> int:
        return int(self.coefficients.shape[0])

    @property
    def n_p(self) -> int:
        # each support vector stores n features and one coefficient, plus the bias
        return self.n_sv * (self.n + 1) + 1

    def decision_function(self, X) -> np.ndarray:
        Z = standardize_apply(self.scale, np.atleast_2d(X))
        if self.n_sv == 0:
            return np.full(Z.shape[0], self.bias)
        K = _kernels.rbf_matrix(Z, self.support_vectors, self.kernel.sigma)
        return K @ self.coefficients + self.bias

    def predict(self, X) -> np.ndarray:
        return sign_array(self.decision_function(X))


def _bias(alpha, G, y, Cb) -> float:
    """Average of -y_i G_i over free vectors, else the midpoint of the feasible range."""
    v = -y * G
    free = (alpha > 0) & (alpha < Cb)
    if free.any():
        return float(v[free].mean())
    at0 = alpha <= 0
    atC = alpha >= Cb
    pos = y > 0
    lower = v[(pos & at0) | (~pos & atC)]
    upper = v[(pos & atC) | (~pos & at0)]
    if lower.size and upper.size:
        return float((lower.max() + upper.min()) / 2)
    if lower.size:
        return float(lower.max())
    if upper.size:
        return float(upper.min())
    return 0.0


@dataclass(frozen=True)
class SmoResult:
    alpha: np.ndarray
    bias: float
    gradient: np.ndarray
    iterations: int
    gap: float
    cache_hits: int
    cache_misses: int


def solve_dual(Z: np.ndarray, y: np.ndarray, cfg: SvmConfig, solver=None) -> SmoResult:
    """Run SMO on standardized features ``Z`` and labels ``y``."""
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] < 2:
        raise DataError("need at least two samples")
    if np.all(y == y[0]):
        raise DataError("degenerate labels: both classes are required")
    Cb = cfg.upper_bounds(y).astype(np.float64)
    n_slots = max(2, int(cfg.cache_bytes // (8 * y.shape[0])))
    solver = solver or _kernels.smo_solve
    alpha, G, it, status, gap, stats = solver(Z, y, Cb, cfg.sigma, cfg.kkt_tol, cfg.max_passes, n_slots)
    if stats[2]:
        raise SmoMonotonicityError(f"dual objective decreased on {int(stats[2])} pair updates")
    if status != _kernels.STATUS_OK:
        raise SmoNotConverged(
            f"SMO did not converge within {cfg.max_passes} iterations (KKT gap {gap:.3g})",
            alpha=alpha, gap=float(gap), iterations=int(it),
        )
    return SmoResult(alpha, _bias(alpha, G, y, Cb), G, int(it), float(gap), int(stats[0]), int(stats[1]))


def svm_train(dataset: LabeledDataset, cfg: SvmConfig, scale: ScaleParams | None = None) -> SvmModel:
    scale = scale or standardize_fit(dataset)
    Z = standardize_apply(scale, dataset.X)
    res = solve_dual(Z, dataset.y, cfg)
    keep = res.alpha > SV_THRESHOLD
    sv = Z[keep].copy()
    coef = (res.alpha * dataset.y)[keep].astype(np.float64)
    sv.setflags(write=False)
    coef.setflags(write=False)
    log.debug("SMO: %d iterations, %d SVs, gap %.3g", res.iterations, coef.size, res.gap)
    return SvmModel(sv, coef, res.bias, KernelParams(cfg.sigma), scale, res.iterations)


def svm_predict(model: SvmModel, x) -> int:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError("svm_predict takes a single feature vector")
    if x.shape[0] != model.n:
        raise DataError(f"dimension mismatch: expected {model.n} features, got {x.shape[0]}")
    return sign(model.decision_function(x)[0])


def gram(Z: np.ndarray, sigma: float) -> np.ndarray:
    d = Z[:, None, :] - Z[None, :, :]
    return np.exp(-sigma * np.einsum("ijk,ijk->ij", d, d))


def dual_objective(alphas, dataset: LabeledDataset, cfg: SvmConfig, scale: ScaleParams | None = None) -> float:
    """``sum(a) - 1/2 sum_ij y_i y_j a_i a_j K_ij`` for a feasible ``a``.

    Features are standardized exactly as :func:`svm_train` does.
    """
    a = np.asarray(alphas, dtype=np.float64)
    y = dataset.y.astype(np.float64)
    if a.shape != y.shape:
        raise DataError("one multiplier per sample required")
    Cb = cfg.upper_bounds(dataset.y)
    if np.any(a < -FEASIBILITY_TOL) or np.any(a > Cb + FEASIBILITY_TOL):
        raise DataError("infeasible multipliers: box constraint violated")
    if abs(float(a @ y)) > FEASIBILITY_TOL:
        raise DataError("infeasible multipliers: sum(alpha*y) != 0")
    scale = scale or standardize_fit(dataset)
    K = gram(standardize_apply(scale, dataset.X), cfg.sigma)
    ay = a * y
    return float(a.sum() - 0.5 * ay @ K @ ay)
