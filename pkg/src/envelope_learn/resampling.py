"""Random under- and over-sampling to a 1:1 class balance.

Both samplers draw from ``numpy.random.default_rng(seed)`` (PCG64), so a
seed reproduces the same subset on any platform. Output rows keep the input
order for the retained samples; duplicated minority rows are appended.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import DataError, LabeledDataset, STABLE, UNSTABLE

MODES = ("under", "over")


@dataclass(frozen=True)
class ResampleSpec:
    mode: str
    seed: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise DataError(f"resample mode must be one of {MODES}, got {self.mode!r}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def apply(self, dataset: LabeledDataset) -> LabeledDataset:
        fn = undersample if self.mode == "under" else oversample
        return fn(dataset, self.seed)


def _split(dataset: LabeledDataset):
    pos = np.flatnonzero(dataset.y == STABLE)
    neg = np.flatnonzero(dataset.y == UNSTABLE)
    if neg.size == 0:
        raise DataError("no minority samples")
    return pos, neg


def undersample(dataset: LabeledDataset, seed: int = 0) -> LabeledDataset:
    """Keep all minority rows and N- majority rows drawn without replacement.

    When the majority is already no larger than the minority, the input is
    returned unchanged.
    """
    pos, neg = _split(dataset)
    if pos.size <= neg.size:
        return dataset
    rng = np.random.default_rng(seed)
    keep = rng.choice(pos, size=neg.size, replace=False)
    return dataset.subset(np.sort(np.concatenate([keep, neg])))


def oversample(dataset: LabeledDataset, seed: int = 0) -> LabeledDataset:
    """Keep every row and duplicate minority rows until N- equals N+."""
    pos, neg = _split(dataset)
    extra = pos.size - neg.size
    if extra <= 0:
        return dataset
    rng = np.random.default_rng(seed)
    dup = rng.choice(neg, size=extra, replace=True)
    return dataset.subset(np.concatenate([np.arange(dataset.N), dup]))
