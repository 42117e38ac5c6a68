"""Skewed-data metrics, grid search, f-sensitivity sweeps and seed studies.

The metrics follow the usual imbalanced-classification definitions with +1
as the positive (stable) class::

    TPR = TP / N+        TNR = TN / N-        total = (TPR + TNR) / 2

Rates are computed from exact fractions of the counts and rounded once, so
``total`` is the correctly rounded value of the exact mean.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import os
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Mapping, Sequence

import numpy as np

from .data import DataError, LabeledDataset, STABLE, UNSTABLE
from .trainers import Trainer

JOBS_ENV = "ENVELOPE_LEARN_JOBS"


@dataclass(frozen=True)
class EvalReport:
    TP: int
    TN: int
    N_pos: int
    N_neg: int
    n_p: int = 0
    hyper_params: Mapping[str, Any] = field(default_factory=dict)
    error: str | None = None

    def __post_init__(self):
        if self.error is None:
            if self.N_pos <= 0 or self.N_neg <= 0:
                raise DataError("undefined rate: both classes must be present")
            if not (0 <= self.TP <= self.N_pos and 0 <= self.TN <= self.N_neg):
                raise DataError("inconsistent confusion counts")

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def tpr_exact(self) -> Fraction:
        return Fraction(self.TP, self.N_pos)

    @property
    def tnr_exact(self) -> Fraction:
        return Fraction(self.TN, self.N_neg)

    @property
    def total_exact(self) -> Fraction:
        return (self.tpr_exact + self.tnr_exact) / 2

    @property
    def TPR(self) -> float:
        return float(self.tpr_exact) if self.ok else math.nan

    @property
    def TNR(self) -> float:
        return float(self.tnr_exact) if self.ok else math.nan

    @property
    def total_accuracy(self) -> float:
        return float(self.total_exact) if self.ok else math.nan

    @classmethod
    def failed(cls, hyper_params: Mapping[str, Any], message: str) -> "EvalReport":
        return cls(0, 0, 0, 0, 0, dict(hyper_params), message)


def confusion_rates(predictions, labels, n_p: int = 0, hyper_params: Mapping[str, Any] | None = None) -> EvalReport:
    p = np.asarray(predictions)
    y = np.asarray(labels)
    if p.shape != y.shape or p.ndim != 1:
        raise DataError(f"predictions ({p.shape}) and labels ({y.shape}) differ in length")
    pos = y == STABLE
    neg = y == UNSTABLE
    if not np.all(pos | neg) or not np.all((p == STABLE) | (p == UNSTABLE)):
        raise DataError("labels and predictions must be -1 or +1")
    n_pos, n_neg = int(pos.sum()), int(neg.sum())
    if n_pos == 0 or n_neg == 0:
        raise DataError("undefined rate: both classes must be present")
    tp = int(np.count_nonzero(pos & (p == STABLE)))
    tn = int(np.count_nonzero(neg & (p == UNSTABLE)))
    return EvalReport(tp, tn, n_pos, n_neg, int(n_p), dict(hyper_params or {}))


def evaluate(model, data: LabeledDataset, hyper_params: Mapping[str, Any] | None = None) -> EvalReport:
    return confusion_rates(model.predict(data.X), data.y, model.n_p, hyper_params)


def loss_value(kind: str, margin: float) -> float:
    """Logistic ``log(1+e^-m)``, hinge ``max(0, 1-m)`` or squared ``(1-m)^2``."""
    m = float(margin)
    if not math.isfinite(m):
        raise DataError("margin must be finite")
    if kind == "logistic":
        return float(np.logaddexp(0.0, -m))
    if kind == "hinge":
        return max(0.0, 1.0 - m)
    if kind == "squared":
        return (1.0 - m) ** 2
    raise DataError(f"unknown loss kind {kind!r}")


# -- grids -------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Ordered hyper-parameter axes; cells enumerate the Cartesian product."""

    axes: tuple[tuple[str, tuple], ...]

    def __init__(self, axes: Mapping[str, Sequence] | Sequence[tuple[str, Sequence]]):
        items = list(axes.items()) if isinstance(axes, Mapping) else list(axes)
        if not items:
            raise DataError("grid needs at least one axis")
        names = [k for k, _ in items]
        if len(set(names)) != len(names):
            raise DataError("duplicate grid axis")
        norm = []
        for k, vals in items:
            vals = tuple(vals)
            if not vals:
                raise DataError(f"grid axis {k!r} is empty")
            norm.append((str(k), vals))
        object.__setattr__(self, "axes", tuple(norm))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.axes)

    def cells(self) -> list[dict[str, Any]]:
        return [dict(zip(self.names, combo)) for combo in itertools.product(*(v for _, v in self.axes))]

    def __len__(self) -> int:
        return math.prod(len(v) for _, v in self.axes)


def _sort_key(rep: EvalReport, names: Sequence[str]):
    hp = tuple(rep.hyper_params.get(k) for k in names)
    if not rep.ok:
        return (1, 0.0, 0, hp)
    return (0, -rep.total_exact, rep.n_p, hp)


def rank_reports(reports: Sequence[EvalReport], names: Sequence[str]) -> list[EvalReport]:
    """Total accuracy descending, then fewer parameters, then grid values ascending."""
    return sorted(reports, key=lambda r: _sort_key(r, names))


def kfold_indices(y, k: int) -> list[np.ndarray]:
    """Deterministic stratified folds: the i-th sample of each class goes to fold i mod k."""
    y = np.asarray(y)
    if k < 2:
        raise DataError("k-fold needs k >= 2")
    fold = np.empty(y.size, dtype=np.int64)
    for cls in (STABLE, UNSTABLE):
        idx = np.flatnonzero(y == cls)
        fold[idx] = np.arange(idx.size) % k
    return [np.flatnonzero(fold == i) for i in range(k)]


def _evaluate_cell(trainer: Trainer, params: dict, train: LabeledDataset, test: LabeledDataset | None,
                   folds: int | None) -> EvalReport:
    try:
        if folds:
            parts = kfold_indices(train.y, folds)
            tp = tn = npos = nneg = 0
            n_p = 0
            for i, hold in enumerate(parts):
                fit_idx = np.sort(np.concatenate([q for j, q in enumerate(parts) if j != i]))
                model = trainer.fit(train.subset(fit_idx), params)
                r = evaluate(model, train.subset(hold))
                tp, tn, npos, nneg = tp + r.TP, tn + r.TN, npos + r.N_pos, nneg + r.N_neg
                n_p = max(n_p, r.n_p)
            return EvalReport(tp, tn, npos, nneg, n_p, dict(params))
        model = trainer.fit(train, params)
        return evaluate(model, test, params)
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        return EvalReport.failed(params, f"{type(exc).__name__}: {exc}")


def default_jobs() -> int:
    raw = os.environ.get(JOBS_ENV, "").strip()
    if not raw:
        return 1
    try:
        jobs = int(raw)
    except ValueError:
        raise DataError(f"{JOBS_ENV} must be an integer, got {raw!r}") from None
    if jobs < 1:
        raise DataError(f"{JOBS_ENV} must be >= 1")
    return jobs


@dataclass(frozen=True)
class GridResult:
    trainer: Trainer
    grid: GridSpec
    cells: tuple[EvalReport, ...]  # grid order
    ranked: tuple[EvalReport, ...]

    @property
    def best(self) -> EvalReport:
        return self.ranked[0]


def grid_search(trainer: Trainer, grid: GridSpec, train: LabeledDataset, test: LabeledDataset | None = None,
                jobs: int | None = None, folds: int | None = None) -> GridResult:
    """Train and score every grid cell.

    Without ``folds`` each cell is trained on ``train`` and scored on
    ``test``. With ``folds = k`` cells are scored by stratified k-fold
    cross-validation on ``train`` (confusion counts pooled over folds) and
    ``test`` is not used. A failing cell yields a report carrying the error
    and ranks last. Cells may run concurrently; results are assembled in grid
    order, so the output does not depend on ``jobs``.
    """
    if folds is None:
        if test is None:
            raise DataError("a test set is required unless k-fold is requested")
        if test is train or np.shares_memory(train.X, test.X):
            raise DataError("train and test sets must be disjoint")
    cells = grid.cells()
    jobs = default_jobs() if jobs is None else int(jobs)
    if jobs < 1:
        raise DataError("jobs must be >= 1")
    if jobs == 1 or len(cells) == 1:
        reports = [_evaluate_cell(trainer, c, train, test, folds) for c in cells]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            reports = list(pool.map(lambda c: _evaluate_cell(trainer, c, train, test, folds), cells))
    return GridResult(trainer, grid, tuple(reports), tuple(rank_reports(reports, grid.names)))


def _fmt_rate(v: float) -> str:
    return "  fail" if math.isnan(v) else f"{v:.3f}"


def format_grid_table(result: GridResult) -> str:
    """Plain-text TPR, TNR and total-accuracy blocks.

    Columns are the values of the last axis; each row is one combination of
    the remaining axes.
    """
    names = result.grid.names
    axes = dict(result.grid.axes)
    col_name = names[-1]
    cols = axes[col_name]
    row_names = names[:-1]
    rows = list(itertools.product(*(axes[k] for k in row_names))) if row_names else [()]
    by_key = {tuple(r.hyper_params[k] for k in names): r for r in result.cells}
    label_w = max([len(" ".join(f"{k}={v}" for k, v in zip(row_names, row))) for row in rows] + [len(col_name) + 2])
    out = [f"{result.trainer.name}  ({len(result.cells)} cells)"]
    for block, attr in (("TPR", "TPR"), ("TNR", "TNR"), ("total accuracy", "total_accuracy")):
        out.append("")
        out.append(block)
        out.append(f"{col_name + ' =':<{label_w}} " + " ".join(f"{str(c):>7}" for c in cols))
        for row in rows:
            label = " ".join(f"{k}={v}" for k, v in zip(row_names, row))
            vals = [getattr(by_key[row + (c,)], attr) for c in cols]
            out.append(f"{label:<{label_w}} " + " ".join(f"{_fmt_rate(v):>7}" for v in vals))
    b = result.best
    out.append("")
    if b.ok:
        hp = ", ".join(f"{k}={b.hyper_params[k]}" for k in names)
        out.append(f"best: {hp}  TPR {b.TPR:.3f}  TNR {b.TNR:.3f}  total {b.total_accuracy:.3f}  n_p {b.n_p}")
    else:
        out.append("best: every cell failed")
    return "\n".join(out) + "\n"


REPORT_FIELDS = ("TP", "TN", "N_pos", "N_neg", "TPR", "TNR", "total_accuracy", "n_p", "error")


def _cell(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return "" if v is None else str(v)


def reports_to_csv(reports: Sequence[EvalReport], names: Sequence[str] | None = None) -> str:
    names = list(names if names is not None else (reports[0].hyper_params.keys() if reports else []))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(names) + list(REPORT_FIELDS))
    for r in reports:
        w.writerow([_cell(r.hyper_params.get(k)) for k in names] + [_cell(getattr(r, f)) for f in REPORT_FIELDS])
    return buf.getvalue()


# -- sweeps and seed studies ---------------------------------------------------

@dataclass(frozen=True)
class SweepPoint:
    f: float
    report: EvalReport

    @property
    def TPR(self) -> float:
        return self.report.TPR

    @property
    def TNR(self) -> float:
        return self.report.TNR

    @property
    def total(self) -> float:
        return self.report.total_accuracy


def sensitivity_sweep(trainer: Trainer, f_values: Sequence[float], train: LabeledDataset, test: LabeledDataset,
                      params: Mapping[str, Any] | None = None) -> list[SweepPoint]:
    """Score a cost-sensitive trainer at each ``f`` with other settings fixed.

    Training errors propagate. Points are returned in ascending ``f``.
    """
    if trainer.mode != "cost":
        raise DataError("sensitivity sweep needs a cost-sensitive trainer")
    fs = [float(f) for f in f_values]
    if not fs:
        raise DataError("no f values given")
    if any(not f > 0 for f in fs):
        raise DataError("f values must be > 0")
    base = {k: v for k, v in (params or {}).items() if k != "f"}
    out = []
    for f in sorted(fs):
        hp = dict(base, f=f)
        out.append(SweepPoint(f, evaluate(trainer.fit(train, hp), test, hp)))
    return out


def sweep_to_csv(points: Sequence[SweepPoint]) -> str:
    lines = ["f,TPR,TNR,total"]
    lines += [f"{p.f!r},{p.TPR!r},{p.TNR!r},{p.total!r}" for p in points]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SeedStudy:
    seeds: tuple[int, ...]
    reports: tuple[EvalReport, ...]

    @property
    def totals(self) -> list[float]:
        return [r.total_accuracy for r in self.reports]

    @property
    def summary(self) -> dict[str, float]:
        t = self.totals
        return {"min": min(t), "median": statistics.median(t), "max": max(t)}

    @property
    def spread(self) -> float:
        return max(self.totals) - min(self.totals)

    def to_csv(self) -> str:
        lines = ["seed,TPR,TNR,total,n_p"]
        for s, r in zip(self.seeds, self.reports):
            lines.append(f"{s},{r.TPR!r},{r.TNR!r},{r.total_accuracy!r},{r.n_p}")
        for k, v in self.summary.items():
            lines.append(f"{k},,,{v!r},")
        return "\n".join(lines) + "\n"


def multi_seed_study(trainer: Trainer, seeds: Sequence[int], train: LabeledDataset, test: LabeledDataset,
                     params: Mapping[str, Any] | None = None) -> SeedStudy:
    """Retrain an ELM under different hidden-layer seeds, all else fixed."""
    if trainer.family != "elm":
        raise DataError("seed study applies to the elm family")
    seeds = tuple(int(s) for s in seeds)
    if len(seeds) < 2:
        raise DataError("seed study needs at least two seeds")
    reps = []
    for s in seeds:
        hp = dict(params or {}, seed=s)
        reps.append(evaluate(trainer.fit(train, hp), test, hp))
    return SeedStudy(seeds, tuple(reps))
