"""Compare the numba and numpy backends of the hot kernels.

Usage::

    python benchmarks/bench_backends.py [--sizes 500,1500,3000] [--repeat 3]

Both SMO flavours are called directly on the same standardized slice of a
generated benchmark, so the switch env var is not needed here. The engine
simulator is timed the same way. The numba timings exclude compilation (one
warm-up call first).
"""

import argparse
import time

import numpy as np

from envelope_learn import _accel, _kernels, synthetic
from envelope_learn.data import standardize_apply, standardize_fit
from envelope_learn.svm import SvmConfig, solve_dual


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_smo(train, sizes, repeat):
    cfg = SvmConfig(C=1.0, sigma=0.01)
    print(f"{'SMO N':>8} {'numba s':>9} {'numpy s':>9} {'speedup':>8} {'iters':>7} {'max|da|':>9}")
    for N in sizes:
        sub = train.subset(np.arange(min(N, train.N)))
        Z = standardize_apply(standardize_fit(sub), sub.X)
        solve_dual(Z, sub.y, cfg, _kernels.smo_numba)  # warm-up / compile
        t_nb, r_nb = best_of(lambda: solve_dual(Z, sub.y, cfg, _kernels.smo_numba), repeat)
        t_np, r_np = best_of(lambda: solve_dual(Z, sub.y, cfg, _kernels.smo_numpy), repeat)
        diff = float(np.max(np.abs(r_nb.alpha - r_np.alpha)))
        print(f"{sub.N:>8} {t_nb:>9.3f} {t_np:>9.3f} {t_np / t_nb:>8.1f} {r_nb.iterations:>7} {diff:>9.1e}")


def bench_simulator(cycles, repeat):
    cfg = synthetic.GeneratorConfig(cycles=cycles, seed=1)
    draws = synthetic._draws(cfg)
    args = (*draws[0], draws[1], draws[2], synthetic._params(cfg.instability), cfg.noise.as_array())
    synthetic._simulate_numba(*args)  # compile
    t_nb, a = best_of(lambda: synthetic._simulate_numba(*args), repeat)
    t_np, b = best_of(lambda: synthetic._simulate(*args), repeat)
    print(f"simulator {cycles} cycles: numba {t_nb:.4f}s, python/numpy {t_np:.4f}s, "
          f"speedup {t_np / t_nb:.1f}x, max diff {float(np.max(np.abs(a - b))):.1e}")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="500,1500,3000")
    ap.add_argument("--cycles", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    bench = synthetic.make_benchmark(1)
    bench_smo(bench.train, [int(s) for s in args.sizes.split(",")], args.repeat)
    bench_simulator(args.cycles, args.repeat)


if __name__ == "__main__":
    main()
