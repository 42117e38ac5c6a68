"""Extreme learning machine with a random sigmoid hidden layer.

The hidden layer is drawn once from U[-1, 1] and never trained. Output
weights come from one regularised (optionally weighted) least-squares solve
against the +1/-1 labels; the output layer has no bias.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .data import (
    DataError, LabeledDataset, ScaleParams, STABLE, UNSTABLE, sign, sign_array,
    standardize_apply, standardize_fit,
)
from .linear import SingularSystemError

# Above this condition number an unregularised solve is treated as singular.
MAX_COND_UNREGULARISED = 1e12


@dataclass(frozen=True)
class HiddenLayer:
    W_r: np.ndarray  # n x n_h
    b_r: np.ndarray  # n_h
    seed: int

    @property
    def n(self) -> int:
        return int(self.W_r.shape[0])

    @property
    def n_h(self) -> int:
        return int(self.W_r.shape[1])


def init_hidden_layer(n: int, n_h: int, seed: int) -> HiddenLayer:
    """Draw W_r (n x n_h) then b_r (n_h) i.i.d. U[-1, 1] from PCG64(seed)."""
    if n < 1:
        raise DataError("input dimension must be >= 1")
    if n_h < 1:
        raise DataError("hidden layer needs at least one neuron")
    rng = np.random.default_rng(seed)
    W_r = rng.uniform(-1.0, 1.0, size=(n, n_h))
    b_r = rng.uniform(-1.0, 1.0, size=n_h)
    W_r.setflags(write=False)
    b_r.setflags(write=False)
    return HiddenLayer(W_r, b_r, int(seed))


def hidden_map(hidden: HiddenLayer, x) -> np.ndarray:
    """Sigmoid activations for one standardized vector or a row-stacked matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != hidden.n:
        raise DataError(f"dimension mismatch: expected {hidden.n} features, got {x.shape[-1]}")
    z = x @ hidden.W_r + hidden.b_r
    # 1 / (1 + e^-z), split by sign so neither branch overflows
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


@dataclass(frozen=True)
class ClassWeights:
    gamma: np.ndarray
    r: float
    f: float

    @property
    def minority_weight(self) -> float:
        return self.r * self.f


def class_weights(labels, f: float = 1.0) -> ClassWeights:
    """Weight 1 for the +1 class and ``r * f`` for the -1 class, r = N+/N-."""
    y = np.asarray(labels)
    if not f > 0:
        raise DataError("scaling factor f must be > 0")
    n_pos = int(np.count_nonzero(y == STABLE))
    n_neg = int(np.count_nonzero(y == UNSTABLE))
    if n_neg == 0:
        raise DataError("no minority samples")
    if n_pos == 0:
        raise DataError("no majority samples")
    r = n_pos / n_neg
    gamma = np.where(y == UNSTABLE, r * f, 1.0)
    gamma.setflags(write=False)
    return ClassWeights(gamma, r, float(f))


@dataclass(frozen=True)
class ElmModel:
    hidden: HiddenLayer
    W: np.ndarray
    lam: float
    scale: ScaleParams

    kind = "elm"

    @property
    def n(self) -> int:
        return self.hidden.n

    @property
    def n_h(self) -> int:
        return self.hidden.n_h

    @property
    def n_p(self) -> int:
        # input weights + hidden biases + output weights
        return self.n * self.n_h + 2 * self.n_h

    def decision_function(self, X) -> np.ndarray:
        H = hidden_map(self.hidden, standardize_apply(self.scale, np.atleast_2d(X)))
        return H @ self.W

    def predict(self, X) -> np.ndarray:
        return sign_array(self.decision_function(X))


def solve_output_weights(H: np.ndarray, Y: np.ndarray, lam: float, gamma=None) -> np.ndarray:
    """Solve ``(H^T G H + lam I) W = H^T G Y`` by Cholesky."""
    if gamma is None:
        HG = H
    else:
        HG = H * np.asarray(gamma, dtype=np.float64)[:, None]
    M = HG.T @ H
    rhs = HG.T @ Y
    if lam > 0:
        M[np.diag_indices_from(M)] += lam
    elif np.linalg.cond(M) > MAX_COND_UNREGULARISED:
        raise SingularSystemError("singular normal equations")
    try:
        c = linalg.cho_factor(M, lower=True, check_finite=False)
    except linalg.LinAlgError:
        raise SingularSystemError("singular normal equations") from None
    return linalg.cho_solve(c, rhs, check_finite=False)


def elm_train(dataset: LabeledDataset, hidden: HiddenLayer, lam: float,
              weights: ClassWeights | np.ndarray | None = None,
              scale: ScaleParams | None = None) -> ElmModel:
    if dataset.N < 1:
        raise DataError("empty dataset")
    if lam < 0:
        raise DataError("lambda must be >= 0")
    if dataset.n != hidden.n:
        raise DataError(f"dimension mismatch: dataset has {dataset.n} features, hidden layer expects {hidden.n}")
    scale = scale or standardize_fit(dataset)
    H = hidden_map(hidden, standardize_apply(scale, dataset.X))
    gamma = weights.gamma if isinstance(weights, ClassWeights) else weights
    if gamma is not None and np.shape(gamma) != (dataset.N,):
        raise DataError("one weight per sample required")
    W = solve_output_weights(H, dataset.y.astype(np.float64), lam, gamma)
    W.setflags(write=False)
    return ElmModel(hidden, W, float(lam), scale)


def elm_predict(model: ElmModel, x) -> int:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DataError("elm_predict takes a single feature vector")
    return sign(model.decision_function(x)[0])
