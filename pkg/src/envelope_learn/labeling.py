"""Turn a per-cycle engine trace into a labeled classification dataset.

Cycle ``k`` is unstable (-1) when the next cycle misfires (IMEP below the
misfire limit) or CA50 varies too much over cycles ``k+1 .. k+p``. Inside a
run of consecutive unstable cycles only the first is kept. Cycle ``k`` is
stable (+1) when no cycle in ``k-p .. k+p`` misfires and the forward CA50
variance is within the limit. Everything else is left unlabeled.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import DataError, LabeledDataset, STABLE, UNSTABLE

CHANNELS = (
    "IVO", "EVC", "FM", "SOI", "T_in", "P_in", "mdot_in",
    "T_ex", "P_ex", "T_c", "FA", "IMEP", "CA50",
)
N_CHANNELS = len(CHANNELS)
IMEP_COL = CHANNELS.index("IMEP")
CA50_COL = CHANNELS.index("CA50")

# Well above ordinary cycle-to-cycle CA50 scatter (std ~0.1-0.6 deg) and well
# below the variance of a developed period-doubling oscillation.
DEFAULT_CA50_VAR_LIMIT = 4.0


@dataclass(frozen=True)
class EngineTrace:
    """T x 13 per-cycle records in :data:`CHANNELS` order.

    ``imep_cyl``/``ca50_cyl`` optionally hold per-cylinder columns (T x c);
    when absent the aggregate IMEP and CA50 channels stand in for a single
    cylinder.
    """

    data: np.ndarray
    imep_cyl: np.ndarray | None = None
    ca50_cyl: np.ndarray | None = None

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2 or data.shape[1] != N_CHANNELS:
            raise DataError(f"trace must be T x {N_CHANNELS}, got shape {data.shape}")
        if data.shape[0] < 1:
            raise DataError("trace has no cycles")
        if not np.all(np.isfinite(data)):
            raise DataError("trace values must be finite")
        data = np.array(data)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        for name in ("imep_cyl", "ca50_cyl"):
            v = getattr(self, name)
            if v is not None:
                v = np.array(v, dtype=np.float64).reshape(data.shape[0], -1)
                v.setflags(write=False)
                object.__setattr__(self, name, v)

    @property
    def T(self) -> int:
        return int(self.data.shape[0])

    def channel(self, name: str) -> np.ndarray:
        return self.data[:, CHANNELS.index(name)]

    def cylinder_imep(self) -> np.ndarray:
        return self.data[:, IMEP_COL:IMEP_COL + 1] if self.imep_cyl is None else self.imep_cyl

    def cylinder_ca50(self) -> np.ndarray:
        return self.data[:, CA50_COL:CA50_COL + 1] if self.ca50_cyl is None else self.ca50_cyl


@dataclass(frozen=True)
class LabelingConfig:
    n_hist: int = 2
    p: int = 5
    imep_misfire_limit: float = 0.1
    ca50_var_limit: float = DEFAULT_CA50_VAR_LIMIT

    def __post_init__(self):
        if self.n_hist < 0:
            raise DataError("history depth must be >= 0")
        if self.p < 1:
            raise DataError("half-window p must be >= 1")
        if not self.imep_misfire_limit > 0:
            raise DataError("misfire limit must be > 0")
        if not self.ca50_var_limit > 0:
            raise DataError("CA50 variance limit must be > 0")

    @property
    def window(self) -> int:
        return 2 * self.p


def feature_names(n_hist: int) -> tuple[str, ...]:
    names = []
    for lag in range(n_hist + 1):
        suffix = "k" if lag == 0 else f"k-{lag}"
        names.extend(f"{ch}@{suffix}" for ch in CHANNELS)
    return tuple(names)


def build_feature_vector(trace: EngineTrace, k: int, n_hist: int) -> np.ndarray:
    """Channels at cycle k, then k-1, ..., k-n_hist (length 13*(n_hist+1))."""
    if k < n_hist:
        raise DataError("insufficient history")
    if not 0 <= k < trace.T:
        raise DataError(f"cycle {k} outside trace of length {trace.T}")
    return trace.data[k - n_hist:k + 1][::-1].ravel()


def _feature_matrix(trace: EngineTrace, ks: np.ndarray, n_hist: int) -> np.ndarray:
    if ks.size == 0:
        return np.empty((0, N_CHANNELS * (n_hist + 1)))
    lags = np.arange(n_hist + 1)
    return trace.data[ks[:, None] - lags[None, :]].reshape(ks.size, -1)


def _forward_variance(ca50: np.ndarray, p: int, n_k: int) -> np.ndarray:
    """Population variance of ca50[k+1 .. k+p] for k = 0 .. n_k-1 (per column)."""
    win = np.lib.stride_tricks.sliding_window_view(ca50, p, axis=0)  # (T-p+1, c, p)
    return win[1:n_k + 1].var(axis=-1)


@dataclass(frozen=True)
class CycleFlags:
    """Per-cycle rule outcomes for k = 0 .. T-p-1 (for inspection and tests)."""

    unstable: np.ndarray
    run_start: np.ndarray
    stable: np.ndarray
    eligible: np.ndarray


def cycle_flags(trace: EngineTrace, cfg: LabelingConfig) -> CycleFlags:
    T, p = trace.T, cfg.p
    k0 = max(cfg.n_hist, p)
    if T < k0 + p + 1:
        raise DataError(f"trace too short: {T} cycles, need at least {k0 + p + 1}")
    n_k = T - p  # k = 0 .. T-p-1 have a full forward window
    imep = trace.cylinder_imep()
    misfire = np.any(imep < cfg.imep_misfire_limit, axis=1)
    high_var = np.any(_forward_variance(trace.cylinder_ca50(), p, n_k) > cfg.ca50_var_limit, axis=1)

    unstable = misfire[1:n_k + 1] | high_var
    run_start = unstable.copy()
    run_start[1:] &= ~unstable[:-1]

    # misfire anywhere in k-p .. k+p, via a prefix sum over the misfire flags
    csum = np.concatenate(([0], np.cumsum(misfire)))
    ks = np.arange(n_k)
    lo = np.clip(ks - p, 0, T)
    hi = np.clip(ks + p + 1, 0, T)
    window_clean = (csum[hi] - csum[lo]) == 0
    stable = window_clean & ~high_var & (ks >= p)

    eligible = ks >= k0
    return CycleFlags(unstable, run_start, stable, eligible)


def label_cycles(trace: EngineTrace, cfg: LabelingConfig | None = None) -> LabeledDataset:
    """Label every eligible cycle ``max(n_hist, p) <= k <= T-p-1``.

    Runs of unstable cycles are tracked from cycle 0, so an eligible cycle
    that continues a run begun before the eligibility cut-off is dropped.
    """
    cfg = cfg or LabelingConfig()
    flags = cycle_flags(trace, cfg)
    neg = flags.eligible & flags.run_start
    pos = flags.eligible & flags.stable
    ks = np.flatnonzero(neg | pos)
    y = np.where(pos[ks], STABLE, UNSTABLE)
    X = _feature_matrix(trace, ks, cfg.n_hist)
    return LabeledDataset(X, y, feature_names(cfg.n_hist), ks)


# -- trace CSV ---------------------------------------------------------------

TRACE_HEADER = ("cycle",) + CHANNELS


def trace_to_csv(trace: EngineTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_HEADER)
    for k in range(trace.T):
        w.writerow([str(k)] + [repr(float(v)) for v in trace.data[k]])
    return buf.getvalue()


def write_trace_csv(trace: EngineTrace, path: str | Path) -> None:
    Path(path).write_text(trace_to_csv(trace), encoding="utf-8")


def read_trace_csv(path: str | Path) -> EngineTrace:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError("empty trace file") from None
        missing = [c for c in CHANNELS if c not in header]
        if missing:
            raise DataError(f"trace is missing channel column(s): {', '.join(missing)}")
        cols = [header.index(c) for c in CHANNELS]
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([float(row[c]) for c in cols])
            except (ValueError, IndexError) as exc:
                raise DataError(f"line {lineno}: {exc}") from None
    if not rows:
        raise DataError("trace has no cycles")
    return EngineTrace(np.asarray(rows))
