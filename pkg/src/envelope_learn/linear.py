"""Linear baselines: logistic regression and ridge least squares.

Both accept per-sample weights so the same code serves the plain,
re-sampled and cost-sensitive variants.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .data import (
    DataError, LabeledDataset, ScaleParams, sign, sign_array, standardize_apply, standardize_fit,
)

log = logging.getLogger(__name__)


class SingularSystemError(ArithmeticError):
    pass


@dataclass(frozen=True)
class LinearModel:
    beta1: np.ndarray
    beta0: float
    scale: ScaleParams
    kind: str = "linear"  # "logistic" or "linear_ls"
    converged: bool = True
    iterations: int = 0

    def __post_init__(self):
        b1 = np.array(self.beta1, dtype=np.float64).ravel()
        if b1.shape[0] != self.scale.n:
            raise DataError("coefficient length differs from scale parameters")
        if not (np.all(np.isfinite(b1)) and np.isfinite(self.beta0)):
            raise DataError("non-finite coefficients")
        b1.setflags(write=False)
        object.__setattr__(self, "beta1", b1)
        object.__setattr__(self, "beta0", float(self.beta0))

    @property
    def n(self) -> int:
        return int(self.beta1.shape[0])

    @property
    def n_p(self) -> int:
        return self.n + 1

    def decision_function(self, X) -> np.ndarray:
        Z = standardize_apply(self.scale, np.atleast_2d(X))
        return Z @ self.beta1 + self.beta0

    def predict(self, X) -> np.ndarray:
        return sign_array(self.decision_function(X))


def predict_linear(model: LinearModel, x) -> int:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError("predict_linear takes a single feature vector")
    return sign(model.decision_function(x)[0])


def _weights(w, N: int) -> np.ndarray:
    if w is None:
        return np.ones(N)
    w = np.asarray(w, dtype=np.float64).ravel()
    if w.shape[0] != N:
        raise DataError(f"{w.shape[0]} weights for {N} samples")
    if not np.all(np.isfinite(w)) or np.any(w < 0):
        raise DataError("sample weights must be finite and non-negative")
    return w


def _augment(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((X.shape[0], 1))])


def logistic_loss_and_gradient(theta, X, y, sample_weights=None, l2: float = 0.0):
    """Weighted logistic loss and its gradient.

    ``theta`` is ``(beta1..., beta0)``; ``X`` is the (already scaled) design
    without the bias column. The loss is
    ``sum_i w_i log(1 + exp(-y_i (beta1.x_i + beta0))) + l2/2 |beta1|^2``.
    """
    X = np.asarray(X, dtype=np.float64)
    theta = np.asarray(theta, dtype=np.float64).ravel()
    if X.ndim != 2 or theta.shape[0] != X.shape[1] + 1:
        raise DataError(f"dimension mismatch: theta has {theta.shape[0]} entries for {X.shape[1]} features")
    y = np.asarray(y, dtype=np.float64)
    w = _weights(sample_weights, X.shape[0])
    margin = y * (X @ theta[:-1] + theta[-1])
    # log(1 + e^-m) without overflow
    loss = float(w @ np.logaddexp(0.0, -margin))
    # d/dm log(1+e^-m) = -sigmoid(-m) = -(1 - expit(m))
    coef = -w * y * _expit(-margin)
    grad = np.empty_like(theta)
    grad[:-1] = X.T @ coef
    grad[-1] = coef.sum()
    if l2:
        loss += 0.5 * l2 * float(theta[:-1] @ theta[:-1])
        grad[:-1] += l2 * theta[:-1]
    return loss, grad


def _expit(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _require_both_classes(y: np.ndarray) -> None:
    if np.all(y == y[0]):
        raise DataError("degenerate labels")


def train_logistic(dataset: LabeledDataset, sample_weights=None, max_iters: int = 10_000,
                   tol: float = 1e-8, l2: float = 1e-6, scale: ScaleParams | None = None) -> LinearModel:
    """Full-batch gradient descent with Armijo backtracking.

    Each iteration starts from the step ``1/L`` where ``L`` bounds the
    curvature of the loss, and halves it until the sufficient-decrease test
    passes. Stops when the gradient norm drops to ``tol`` or after
    ``max_iters`` iterations.
    """
    if dataset.N < 1:
        raise DataError("empty dataset")
    _require_both_classes(dataset.y)
    scale = scale or standardize_fit(dataset)
    X = standardize_apply(scale, dataset.X)
    y = dataset.y.astype(np.float64)
    w = _weights(sample_weights, dataset.N)

    Xa = _augment(X)
    # Hessian of the logistic term is bounded by X^T W X / 4
    lip = 0.25 * float(linalg.eigvalsh((Xa * w[:, None]).T @ Xa, subset_by_index=[Xa.shape[1] - 1] * 2)[0]) + l2
    step0 = 1.0 / max(lip, 1e-12)

    theta = np.zeros(X.shape[1] + 1)
    loss, grad = logistic_loss_and_gradient(theta, X, y, w, l2)
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        gnorm2 = float(grad @ grad)
        if np.sqrt(gnorm2) <= tol:
            converged = True
            it -= 1
            break
        step = step0
        while True:
            cand = theta - step * grad
            c_loss, c_grad = logistic_loss_and_gradient(cand, X, y, w, l2)
            decrease = 0.5 * step * gnorm2
            if c_loss <= loss - decrease:
                break
            # below the loss's floating-point resolution the test is noise;
            # 1/L is a guaranteed descent step, so take it
            if decrease < 1e-13 * max(1.0, abs(loss)):
                step = step0
                cand = theta - step * grad
                c_loss, c_grad = logistic_loss_and_gradient(cand, X, y, w, l2)
                break
            step *= 0.5
        theta, loss, grad = cand, c_loss, c_grad
    else:
        converged = float(np.linalg.norm(grad)) <= tol
    if not converged:
        log.debug("logistic regression stopped at max_iters=%d, |grad|=%.3g", max_iters, np.linalg.norm(grad))
    return LinearModel(theta[:-1], theta[-1], scale, "logistic", converged, it)


def train_linear_ls(dataset: LabeledDataset, sample_weights=None, lam: float = 0.0,
                    scale: ScaleParams | None = None) -> LinearModel:
    """Solve ``(A^T G A + lam I) theta = A^T G y`` with ``A = [X 1]``.

    The ridge term covers the bias as well. With ``lam == 0`` a rank-deficient
    weighted design raises :class:`SingularSystemError`.
    """
    if dataset.N < 1:
        raise DataError("empty dataset")
    if lam < 0:
        raise DataError("lambda must be >= 0")
    scale = scale or standardize_fit(dataset)
    A = _augment(standardize_apply(scale, dataset.X))
    w = _weights(sample_weights, dataset.N)
    y = dataset.y.astype(np.float64)
    theta = solve_weighted_ridge(A, y, w, lam)
    return LinearModel(theta[:-1], theta[-1], scale, "linear_ls")


def solve_weighted_ridge(A: np.ndarray, y: np.ndarray, w: np.ndarray, lam: float) -> np.ndarray:
    """Minimiser of ``(A t - y)^T diag(w) (A t - y) + lam |t|^2`` by Cholesky."""
    Aw = A * w[:, None]
    M = A.T @ Aw
    rhs = Aw.T @ y
    if lam > 0:
        M[np.diag_indices_from(M)] += lam
    else:
        sw = np.sqrt(w)[:, None] * A
        if np.linalg.matrix_rank(sw) < A.shape[1]:
            raise SingularSystemError("singular system")
    try:
        c = linalg.cho_factor(M, lower=True, check_finite=False)
    except linalg.LinAlgError:
        raise SingularSystemError("singular system") from None
    return linalg.cho_solve(c, rhs, check_finite=False)
