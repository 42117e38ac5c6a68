"""Seeded surrogate of a combustion engine running near its stability limit.

The generator is a toy, not a physical model. It only has to produce the
statistical regime the classifiers are meant for: rare unstable cycles that
are announced by input excursions, an instability boundary that is curved in
input space, and a dependence on more than the current cycle.

Model
-----
Four actuators are excited with amplitude-modulated pseudo-random steps
(A-PRBS): each channel holds a level drawn uniformly from ``amplitude *
levels`` for a hold length drawn uniformly from its hold range. Fuel mass is
dithered almost every cycle, the valve timings and injection timing move
slowly. Let ``zF, zI, zE, zS`` be the normalised levels and
``zN = (zI + zE) / 2`` the net valve overlap. Inputs logged on row ``k`` act on
cycle ``k + 1``; fuel additionally acts through the trapped residual, so its
effect arrives one cycle later still.

The combustion margin of cycle ``k`` is::

    theta_k = offset
              - (q_fuel * zF[k-2]**2 + q_valve * zN[k-1]**2 + q_soi * zS[k-1]**2) / 3
              - q_couple * max(0, zF[k-2] * zS[k-1])
              + g_res * (R_k - 1)

where ``R`` is a residual-temperature proxy with one-cycle feedback::

    R_{k+1} = (1 - a_res) * R_k + a_res * fired_k

Cycle ``k`` misfires when ``theta_k + s * l_k <= 0`` with ``l_k`` a logistic
draw clipped to +-8. A misfire cools the residual, which lowers the next
margin, so misfires tend to come in short bursts. A firing cycle whose margin
is below ``band`` enters a period-doubling oscillation: CA50 alternates
around its nominal value with an amplitude that grows by ``grow`` per cycle
(capped at ``ca50_osc_max``). On a misfire IMEP drops to noise around zero
and CA50 holds its last value.

The nonlinear part of the boundary lives in three actuator directions;
everything else in a feature vector is either controlled to a set point or
a deterministic function of actuators and ``R`` plus the configured sensor
noise.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import _accel
from .data import DataError
from .labeling import (
    CHANNELS, EngineTrace, LabelingConfig, cycle_flags, label_cycles,
)

PRESETS = ("stable", "default", "aggressive")
LEVELS7 = (-1.0, -2 / 3, -1 / 3, 0.0, 1 / 3, 2 / 3, 1.0)
IMBALANCE_TOLERANCE = 0.30
LOGISTIC_CLIP = 8.0

# noise channels in draw order
_NOISE = ("T_in", "P_in", "mdot_in", "T_ex", "P_ex", "T_c", "IMEP", "CA50")


@dataclass(frozen=True)
class Excitation:
    """A-PRBS settings for one actuator: level set and inclusive hold range."""

    levels: tuple = LEVELS7
    hold_min: int = 4
    hold_max: int = 20

    def __post_init__(self):
        if len(self.levels) < 1:
            raise DataError("excitation needs at least one level")
        if not 1 <= self.hold_min <= self.hold_max:
            raise DataError("hold range must satisfy 1 <= hold_min <= hold_max")


@dataclass(frozen=True)
class Instability:
    offset: float = 0.9
    q_fuel: float = 1.0
    q_valve: float = 0.5
    q_soi: float = 0.5
    q_couple: float = 0.6
    g_res: float = 0.3  # residual feedback gain
    a_res: float = 0.3  # residual update rate
    misfire_scale: float = 0.08
    band: float = 0.2
    grow: float = 1.8
    ca50_osc_start: float = 0.4
    ca50_osc_max: float = 5.0


@dataclass(frozen=True)
class SensorNoise:
    """Standard deviation of additive noise per measured channel."""

    T_in: float = 0.0
    P_in: float = 0.0
    mdot_in: float = 0.0
    T_ex: float = 0.0
    P_ex: float = 0.0
    T_c: float = 0.0
    IMEP: float = 0.1
    CA50: float = 0.1

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, c) for c in _NOISE], dtype=np.float64)


@dataclass(frozen=True)
class GeneratorConfig:
    cycles: int = 15000
    seed: int = 0
    amplitude: float = 1.0
    fuel: Excitation = field(default_factory=lambda: Excitation(hold_min=1, hold_max=3))
    ivo: Excitation = field(default_factory=Excitation)
    evc: Excitation = field(default_factory=Excitation)
    soi: Excitation = field(default_factory=Excitation)
    instability: Instability = field(default_factory=Instability)
    noise: SensorNoise = field(default_factory=SensorNoise)
    # when set, instability.offset is tuned so labeling hits this N+/N- ratio
    target_imbalance: float | None = None

    def __post_init__(self):
        lab = LabelingConfig()
        if self.cycles < lab.window + lab.n_hist + 1:
            raise DataError(f"cycles must be >= {lab.window + lab.n_hist + 1}")
        if not 0 <= int(self.seed) < 2**64:
            raise DataError("seed must be a 64-bit unsigned integer")
        if not self.amplitude >= 0:
            raise DataError("amplitude must be >= 0")
        if np.any(self.noise.as_array() < 0) or self.instability.misfire_scale < 0:
            raise DataError("noise levels must be >= 0")
        if self.target_imbalance is not None and not self.target_imbalance > 0:
            raise DataError("target_imbalance must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)


def preset(name: str, cycles: int = 15000, seed: int = 0) -> GeneratorConfig:
    """``stable``: small excitation, never misfires. ``default``: tuned to
    N+/N- = 17.5. ``aggressive``: large excitation, frequent instability."""
    if name == "stable":
        return GeneratorConfig(cycles=cycles, seed=seed, amplitude=0.3)
    if name == "default":
        return GeneratorConfig(cycles=cycles, seed=seed, target_imbalance=17.5)
    if name == "aggressive":
        return GeneratorConfig(cycles=cycles, seed=seed, instability=Instability(offset=0.6))
    raise DataError(f"unknown preset {name!r}; choose from {PRESETS}")


def _aprbs(rng: np.random.Generator, T: int, exc: Excitation, amplitude: float) -> np.ndarray:
    n_seg = T // exc.hold_min + 1
    holds = rng.integers(exc.hold_min, exc.hold_max + 1, size=n_seg)
    picks = rng.integers(0, len(exc.levels), size=n_seg)
    lev = amplitude * np.asarray(exc.levels, dtype=np.float64)
    return np.repeat(lev[picks], holds)[:T]


def _simulate(zF, zI, zE, zS, eps, lg, par, sn):
    T = zF.shape[0]
    offset, qF, qN, qS, qX, g_res, a_res, s, band, grow, a0, amax = (
        par[0], par[1], par[2], par[3], par[4], par[5], par[6], par[7], par[8], par[9], par[10], par[11])
    out = np.empty((T, 13))
    R = 1.0
    amp = 0.0
    sgn = 1.0
    ca_last = 7.0
    for k in range(T):
        u = k - 1 if k >= 1 else 0
        u2 = k - 2 if k >= 2 else 0
        f = zF[u2]
        n = 0.5 * (zI[u] + zE[u])
        so = zS[u]
        th = offset - (qF * f * f + qN * n * n + qS * so * so) / 3.0 - qX * max(0.0, f * so) + g_res * (R - 1.0)
        if th + s * lg[k] <= 0.0:
            fired = 0.0
            amp = 0.0
            ca = ca_last
            imep = 0.03 * eps[k, 6]
        else:
            fired = 1.0
            if th < band:
                amp = min(amax, max(amp, a0) * grow)
            else:
                amp = 0.0
            sgn = -sgn
            ca = 7.0 + amp * sgn + sn[7] * eps[k, 7]
            imep = 3.0 * (1.0 + 0.03 * zF[u]) * (1.0 - 0.03 * amp * sgn) + sn[6] * eps[k, 6]
            ca_last = ca
        R = (1.0 - a_res) * R + a_res * fired
        fm = 10.0 + 1.5 * zF[k]
        mdot = 10.0 - 2.0 * 0.5 * (zI[k] + zE[k])
        out[k, 0] = 110.0 + 15.0 * zI[k]
        out[k, 1] = -(110.0 + 15.0 * zE[k])
        out[k, 2] = fm
        out[k, 3] = 330.0 + 20.0 * zS[k]
        out[k, 4] = 40.0 + sn[0] * eps[k, 0]
        out[k, 5] = 95.0 + sn[1] * eps[k, 1]
        out[k, 6] = mdot + sn[2] * eps[k, 2]
        out[k, 7] = 300.0 + 150.0 * R + sn[3] * eps[k, 3]
        out[k, 8] = 101.0 + 0.5 * fired + sn[4] * eps[k, 4]
        out[k, 9] = 88.0 + 4.0 * R + sn[5] * eps[k, 5]
        out[k, 10] = fm / mdot / 0.068
        out[k, 11] = imep
        out[k, 12] = ca
    return out


_simulate_numba = _accel.njit(_simulate)


def _params(inst: Instability) -> np.ndarray:
    return np.array([inst.offset, inst.q_fuel, inst.q_valve, inst.q_soi, inst.q_couple, inst.g_res,
                     inst.a_res, inst.misfire_scale, inst.band, inst.grow, inst.ca50_osc_start,
                     inst.ca50_osc_max], dtype=np.float64)


def _draws(cfg: GeneratorConfig):
    rng = np.random.default_rng(int(cfg.seed))
    T = cfg.cycles
    z = [_aprbs(rng, T, exc, cfg.amplitude) for exc in (cfg.fuel, cfg.ivo, cfg.evc, cfg.soi)]
    eps = rng.standard_normal((T, len(_NOISE)))
    lg = np.clip(rng.logistic(size=T), -LOGISTIC_CLIP, LOGISTIC_CLIP)
    return z, eps, lg


def _run(cfg: GeneratorConfig, draws=None) -> np.ndarray:
    (zF, zI, zE, zS), eps, lg = draws or _draws(cfg)
    fn = _simulate_numba if (_accel.USE_NUMBA and _simulate_numba is not None) else _simulate
    return fn(zF, zI, zE, zS, eps, lg, _params(cfg.instability), cfg.noise.as_array())


def _ratio(data: np.ndarray, lab: LabelingConfig) -> float:
    fl = cycle_flags(EngineTrace(data), lab)
    n_neg = int(np.count_nonzero(fl.run_start & fl.eligible))
    n_pos = int(np.count_nonzero(fl.stable & fl.eligible))
    return math.inf if n_neg == 0 else n_pos / n_neg


def tune_offset(cfg: GeneratorConfig, labeling: LabelingConfig | None = None,
                lo: float = 0.0, hi: float = 2.0, iters: int = 30) -> GeneratorConfig:
    """Bisect ``instability.offset`` until the labeled ratio matches the target.

    The random draws are shared by every probe, so the ratio is (almost)
    monotone in the offset. Returns a config with the offset fixed and no
    target. Raises :class:`DataError` when the target is out of reach.
    """
    if cfg.target_imbalance is None:
        return cfg
    lab = labeling or LabelingConfig()
    target = cfg.target_imbalance
    draws = _draws(cfg)

    def ratio(off):
        c = replace(cfg, instability=replace(cfg.instability, offset=off))
        return _ratio(_run(c, draws), lab)

    r_lo, r_hi = ratio(lo), ratio(hi)
    if not r_lo <= target <= r_hi:
        raise DataError(
            f"target imbalance {target} unreachable: offset {lo} gives ratio {r_lo:.3g}, "
            f"offset {hi} gives {r_hi:.3g} (amplitude {cfg.amplitude}, {cfg.cycles} cycles)")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if ratio(mid) < target:
            lo = mid
        else:
            hi = mid
    # pick the bracket end closer to the target in log-ratio
    best = min((lo, hi), key=lambda o: abs(math.log(max(ratio(o), 1e-12) / target)))
    achieved = ratio(best)
    if abs(achieved / target - 1.0) > IMBALANCE_TOLERANCE:
        raise DataError(f"target imbalance {target} unreachable: closest ratio {achieved:.3g} at offset {best:.4f}")
    return replace(cfg, target_imbalance=None, instability=replace(cfg.instability, offset=round(best, 6)))


def generate_trace(cfg: GeneratorConfig, labeling: LabelingConfig | None = None) -> EngineTrace:
    """Simulate ``cfg.cycles`` cycles; deterministic in ``cfg``."""
    return EngineTrace(_run(tune_offset(cfg, labeling)))


@dataclass(frozen=True)
class Benchmark:
    train: object  # LabeledDataset
    test: object
    config: GeneratorConfig  # resolved (offset fixed)


def make_benchmark(seed: int = 0, train_cycles: int = 9000, test_cycles: int = 15000,
                   n_hist: int = 2, base: GeneratorConfig | None = None) -> Benchmark:
    """Labeled train/test sets from two independent traces.

    The offset is tuned once on the training trace and reused for the test
    trace, so both come from the same engine. With the defaults this gives
    about 6,000 training and 10,000 test samples.
    """
    base = base or preset("default")
    lab = LabelingConfig(n_hist=n_hist)
    cfg_tr = tune_offset(replace(base, cycles=train_cycles, seed=seed), lab)
    cfg_te = replace(cfg_tr, cycles=test_cycles, seed=seed + 1_000_003)
    train = label_cycles(EngineTrace(_run(cfg_tr)), lab)
    test = label_cycles(EngineTrace(_run(cfg_te)), lab)
    return Benchmark(train, test, cfg_tr)


def input_channels() -> tuple[str, ...]:
    return tuple(c for c in CHANNELS if c in ("FM", "IVO", "EVC", "SOI"))
