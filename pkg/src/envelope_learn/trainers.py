"""One entry point for every (model family, imbalance mode) combination.

Families: ``lr`` (logistic regression), ``ls`` (ridge least squares),
``elm`` and ``svm``. Modes:

* ``regular``: train on the data as is.
* ``under`` / ``over``: rebalance to 1:1 by random re-sampling, then train
  unweighted.
* ``cost``: weight the minority class by ``r * f`` (``r = N+/N-`` of the
  training set); for the SVM this widens the minority box to ``C * r * f``.

Hyper-parameters arrive as a plain mapping so grids and config files can
drive them; unknown names are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .data import DataError, LabeledDataset, UNSTABLE
from .elm import class_weights, elm_train, init_hidden_layer
from .linear import train_linear_ls, train_logistic
from .resampling import ResampleSpec
from .svm import SvmConfig, svm_train

FAMILIES = ("lr", "ls", "elm", "svm")
MODES = ("regular", "under", "over", "cost")

# accepted hyper-parameters and their defaults, per family
DEFAULTS: dict[str, dict[str, Any]] = {
    "lr": {"lambda": 1e-6, "max_iters": 10_000, "tol": 1e-8},
    "ls": {"lambda": 1e-3},
    "elm": {"n_h": 90, "lambda": 0.1, "seed": 0},
    "svm": {"C": 1.0, "sigma": 0.01, "kkt_tol": 1e-3, "max_passes": 10_000_000},
}
INT_PARAMS = {"n_h", "seed", "max_iters", "max_passes"}


@dataclass(frozen=True)
class Trainer:
    family: str
    mode: str = "regular"
    resample_seed: int = 0
    fixed: tuple = ()  # (name, value) pairs applied under every fit's params

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DataError(f"unknown model family {self.family!r}; choose from {FAMILIES}")
        if self.mode not in MODES:
            raise DataError(f"unknown imbalance mode {self.mode!r}; choose from {MODES}")

    @property
    def name(self) -> str:
        return f"{self.family}-{self.mode}"

    def resolve(self, params: Mapping[str, Any] | None = None) -> dict[str, Any]:
        """Defaults merged with ``params``; ``f`` is only meaningful in cost mode."""
        out = dict(DEFAULTS[self.family])
        if self.mode == "cost":
            out["f"] = 1.0
        for k, v in list(self.fixed) + list((params or {}).items()):
            if k not in out:
                raise DataError(f"unknown hyper-parameter {k!r} for {self.name}")
            out[k] = int(v) if k in INT_PARAMS else float(v)
        if self.mode == "cost" and not out["f"] > 0:
            raise DataError("scaling factor f must be > 0")
        return out

    def fit(self, train: LabeledDataset, params: Mapping[str, Any] | None = None):
        p = self.resolve(params)
        data = train
        if self.mode in ("under", "over"):
            data = ResampleSpec(self.mode, self.resample_seed).apply(train)
        weights = None
        factor = 1.0
        if self.mode == "cost":
            cw = class_weights(data.y, p["f"])
            weights, factor = cw.gamma, cw.minority_weight
        fam = self.family
        if fam == "lr":
            return train_logistic(data, weights, max_iters=p["max_iters"], tol=p["tol"], l2=p["lambda"])
        if fam == "ls":
            return train_linear_ls(data, weights, p["lambda"])
        if fam == "elm":
            hidden = init_hidden_layer(data.n, p["n_h"], p["seed"])
            return elm_train(data, hidden, p["lambda"], weights)
        cfg = SvmConfig(C=p["C"], sigma=p["sigma"], minority_factor=factor,
                        kkt_tol=p["kkt_tol"], max_passes=p["max_passes"])
        return svm_train(data, cfg)


def minority_ratio(y) -> float:
    y = np.asarray(y)
    n_neg = int(np.count_nonzero(y == UNSTABLE))
    if n_neg == 0:
        raise DataError("no minority samples")
    return (y.size - n_neg) / n_neg
