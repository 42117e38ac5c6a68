"""Dataset containers, z-score scaling and the +1/-1 label conventions.

Label +1 marks stable (majority) operation, -1 marks unstable (minority)
operation. Every learner turns a real score into a label with :func:`sign`,
which sends zero to -1.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

STABLE = 1
UNSTABLE = -1

CONSTANT_FEATURE_STD = 1e-12


class DataError(ValueError):
    """Invalid dataset contents, shapes or files."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def sign(v: float) -> int:
    """Return +1 for strictly positive ``v`` and -1 otherwise (zero included)."""
    v = float(v)
    if not math.isfinite(v):
        raise DataError(f"sign of non-finite value {v!r}")
    return STABLE if v > 0 else UNSTABLE


def sign_array(scores: np.ndarray) -> np.ndarray:
    """Vectorised :func:`sign`; result dtype is int8."""
    scores = np.asarray(scores, dtype=np.float64)
    if not np.all(np.isfinite(scores)):
        raise DataError("sign of non-finite score")
    return np.where(scores > 0, STABLE, UNSTABLE).astype(np.int8)


def check_labels(y) -> np.ndarray:
    y = np.asarray(y)
    if y.ndim != 1:
        raise DataError("labels must be one-dimensional")
    if y.size and not np.all((y == STABLE) | (y == UNSTABLE)):
        bad = sorted(set(np.unique(y).tolist()) - {STABLE, UNSTABLE})
        raise DataError(f"labels must be -1 or +1, got {bad}")
    return y.astype(np.int8)


@dataclass(frozen=True)
class LabeledDataset:
    """Feature matrix ``X`` (N x n) with labels ``y`` in {-1, +1}.

    ``cycles`` optionally carries the source cycle index of each row; it is
    metadata only and never used as a feature.
    """

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...] = ()
    cycles: np.ndarray | None = None

    def __post_init__(self):
        X = np.asarray(self.X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if X.size else X.reshape(0, 0)
        if X.ndim != 2:
            raise DataError("feature matrix must be two-dimensional")
        y = check_labels(self.y)
        if X.shape[0] != y.shape[0]:
            raise DataError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if not np.all(np.isfinite(X)):
            raise DataError("features must be finite")
        names = tuple(self.feature_names) or tuple(f"x{i}" for i in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DataError(f"{len(names)} feature names for {X.shape[1]} columns")
        object.__setattr__(self, "X", _frozen(X))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "feature_names", names)
        if self.cycles is not None:
            cycles = np.asarray(self.cycles, dtype=np.int64)
            if cycles.shape != y.shape:
                raise DataError("cycle index length differs from label count")
            object.__setattr__(self, "cycles", _frozen(cycles))

    @property
    def N(self) -> int:
        return int(self.y.shape[0])

    @property
    def n(self) -> int:
        return int(self.X.shape[1])

    @property
    def n_pos(self) -> int:
        return int(np.count_nonzero(self.y == STABLE))

    @property
    def n_neg(self) -> int:
        return int(np.count_nonzero(self.y == UNSTABLE))

    @property
    def ratio(self) -> float:
        """Majority/minority ratio r = N+ / N-."""
        if self.n_neg == 0:
            raise DataError("no minority samples")
        return self.n_pos / self.n_neg

    def subset(self, idx) -> "LabeledDataset":
        idx = np.asarray(idx, dtype=np.int64)
        cycles = None if self.cycles is None else self.cycles[idx]
        return LabeledDataset(self.X[idx], self.y[idx], self.feature_names, cycles)

    def __len__(self) -> int:
        return self.N


def concat(parts: Sequence[LabeledDataset]) -> LabeledDataset:
    if not parts:
        raise DataError("nothing to concatenate")
    names = parts[0].feature_names
    for p in parts[1:]:
        if p.feature_names != names:
            raise DataError("feature names differ between datasets")
    cycles = None
    if all(p.cycles is not None for p in parts):
        cycles = np.concatenate([p.cycles for p in parts])
    return LabeledDataset(
        np.vstack([p.X for p in parts]), np.concatenate([p.y for p in parts]), names, cycles
    )


@dataclass(frozen=True)
class ScaleParams:
    means: np.ndarray
    scales: np.ndarray = field(repr=False)

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64).ravel()
        scales = np.asarray(self.scales, dtype=np.float64).ravel()
        if means.shape != scales.shape:
            raise DataError("means and scales differ in length")
        if not (np.all(np.isfinite(means)) and np.all(np.isfinite(scales))):
            raise DataError("scale parameters must be finite")
        if np.any(scales <= 0):
            raise DataError("scales must be strictly positive")
        object.__setattr__(self, "means", _frozen(means))
        object.__setattr__(self, "scales", _frozen(scales))

    @property
    def n(self) -> int:
        return int(self.means.shape[0])

    @classmethod
    def identity(cls, n: int) -> "ScaleParams":
        return cls(np.zeros(n), np.ones(n))


def standardize_fit(dataset: LabeledDataset | np.ndarray) -> ScaleParams:
    """Per-feature mean and population standard deviation.

    Features whose deviation is below 1e-12 get scale 1 so they pass through
    centred but unscaled.
    """
    X = dataset.X if isinstance(dataset, LabeledDataset) else np.asarray(dataset, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("empty dataset")
    # shift by the first row so constant columns come out with exactly zero spread
    ref = X[0]
    D = X - ref
    means = ref + D.mean(axis=0)
    std = D.std(axis=0)
    scales = np.where(std < CONSTANT_FEATURE_STD, 1.0, std)
    return ScaleParams(means, scales)


def _check_dim(params: ScaleParams, X: np.ndarray) -> None:
    if X.shape[-1] != params.n:
        raise DataError(f"dimension mismatch: expected {params.n} features, got {X.shape[-1]}")


def standardize_apply(params: ScaleParams, x) -> np.ndarray:
    """Scale one vector or a row-stacked matrix."""
    x = np.asarray(x, dtype=np.float64)
    _check_dim(params, x)
    return (x - params.means) / params.scales


def standardize_invert(params: ScaleParams, z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    _check_dim(params, z)
    return z * params.scales + params.means


# -- CSV -------------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def dataset_to_csv(dataset: LabeledDataset) -> str:
    """Render a dataset as CSV text (feature columns then ``label``).

    A leading ``cycle`` column is written when the dataset carries cycle
    indices. Floats use the shortest round-trip representation so the output
    is byte-stable.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    has_cycles = dataset.cycles is not None
    w.writerow((["cycle"] if has_cycles else []) + list(dataset.feature_names) + ["label"])
    for i in range(dataset.N):
        row = [str(int(dataset.cycles[i]))] if has_cycles else []
        row.extend(_fmt(v) for v in dataset.X[i])
        row.append(str(int(dataset.y[i])))
        w.writerow(row)
    return buf.getvalue()


def write_dataset_csv(dataset: LabeledDataset, path: str | Path) -> None:
    Path(path).write_text(dataset_to_csv(dataset), encoding="utf-8")


def parse_dataset_csv(lines: Iterable[str], require_label: bool = True) -> LabeledDataset:
    reader = csv.reader(lines)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError("empty CSV file") from None
    has_cycles = bool(header) and header[0] == "cycle"
    has_label = bool(header) and header[-1] == "label"
    if require_label and not has_label:
        raise DataError("missing 'label' column")
    lo = 1 if has_cycles else 0
    hi = len(header) - 1 if has_label else len(header)
    names = tuple(header[lo:hi])
    if not names:
        raise DataError("no feature columns")
    X, y, cycles = [], [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
        try:
            X.append([float(v) for v in row[lo:hi]])
            if has_cycles:
                cycles.append(int(row[0]))
            y.append(int(float(row[-1])) if has_label else STABLE)
        except ValueError as exc:
            raise DataError(f"line {lineno}: {exc}") from None
    X = np.asarray(X, dtype=np.float64).reshape(-1, len(names))
    return LabeledDataset(X, np.asarray(y, dtype=np.int64), names, np.asarray(cycles) if has_cycles else None)


def read_dataset_csv(path: str | Path, require_label: bool = True) -> LabeledDataset:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_dataset_csv(fh, require_label=require_label)
