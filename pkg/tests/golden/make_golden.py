"""Regenerate the 30-cycle labeling fixtures and their expected datasets.

The expected label sets are written out by hand below (p = 5, N_h = 2, so
eligible cycles are 5..24) and the CSV text is assembled with plain string
formatting, independently of the package's writers.

Run from the repository root: ``python tests/golden/make_golden.py``.
"""

from pathlib import Path

CHANNELS = ("IVO", "EVC", "FM", "SOI", "T_in", "P_in", "mdot_in",
            "T_ex", "P_ex", "T_c", "FA", "IMEP", "CA50")
T = 30
N_HIST = 2
HERE = Path(__file__).parent

# name -> (misfire cycles, expected +1 cycles, expected -1 cycles)
FIXTURES = {
    "all_stable": ((), list(range(5, 25)), []),
    # a misfire at 16 flags k = 15; every window k-5..k+5 touching 16 loses +1
    "single_misfire": ((16,), list(range(5, 11)) + list(range(22, 25)), [15]),
    # misfires at 16 and 17 flag k = 15 and 16; only the run start is kept
    "consecutive_misfire": ((16, 17), list(range(5, 11)) + list(range(23, 25)), [15]),
}


def value(c: int, k: int, misfires) -> float:
    name = CHANNELS[c]
    if name == "IMEP":
        return 0.0 if k in misfires else 3.0
    if name == "CA50":
        return 7.0
    return float(100 * c + k)


def trace_csv(misfires) -> str:
    rows = [",".join(("cycle",) + CHANNELS)]
    for k in range(T):
        rows.append(",".join([str(k)] + [f"{value(c, k, misfires):.1f}" for c in range(len(CHANNELS))]))
    return "\n".join(rows) + "\n"


def dataset_csv(misfires, pos, neg) -> str:
    names = []
    for lag in range(N_HIST + 1):
        suffix = "k" if lag == 0 else f"k-{lag}"
        names += [f"{ch}@{suffix}" for ch in CHANNELS]
    rows = [",".join(["cycle"] + names + ["label"])]
    for k in sorted(pos + neg):
        feats = [f"{value(c, k - lag, misfires):.1f}" for lag in range(N_HIST + 1) for c in range(len(CHANNELS))]
        rows.append(",".join([str(k)] + feats + ["1" if k in pos else "-1"]))
    return "\n".join(rows) + "\n"


if __name__ == "__main__":
    for name, (mis, pos, neg) in FIXTURES.items():
        (HERE / f"{name}_trace.csv").write_text(trace_csv(mis))
        (HERE / f"{name}_dataset.csv").write_text(dataset_csv(mis, pos, neg))
