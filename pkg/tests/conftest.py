from functools import lru_cache
from pathlib import Path

import numpy as np
import pytest

from envelope_learn.data import LabeledDataset
from envelope_learn.synthetic import make_benchmark

GOLDEN = Path(__file__).parent / "golden"


@lru_cache(maxsize=None)
def benchmark(seed: int, n_hist: int = 2):
    """Synthetic train/test pair, built once per (seed, n_hist) per session."""
    return make_benchmark(seed, n_hist=n_hist)


@pytest.fixture(scope="session")
def bench():
    return benchmark(1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_dataset(rng, N: int, n: int) -> LabeledDataset:
    """Gaussian features with both labels guaranteed present."""
    X = rng.normal(size=(N, n))
    y = np.where(rng.random(N) < 0.5, 1, -1)
    y[0], y[1] = 1, -1
    return LabeledDataset(X, y)


# acceptance verdict lines, echoed in the terminal summary so they survive output capture
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
