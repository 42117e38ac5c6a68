"""Hot loops of the SVM solver, in a numba and a pure-numpy flavour.

Both flavours run the same algorithm with the same tie-breaking (first
index wins), so they agree to rounding error. :data:`smo_solve` is whichever
flavour ``_accel.USE_NUMBA`` selects.

The solver minimises ``f(a) = 1/2 a^T Q a - sum(a)`` with
``Q_ij = y_i y_j exp(-sigma |x_i - x_j|^2)`` subject to ``y^T a = 0`` and
``0 <= a_i <= C_i``, which is the negated SVM dual. Each step picks the
maximal violating pair, solves the two-variable subproblem analytically and
clips it to the box.
"""

import math

import numpy as np

from . import _accel

STATUS_OK = 0
STATUS_MAX_ITER = 1

TAU = 1e-12
# Accepted pair updates must not raise f by more than this (relative).
MONOTONE_SLACK = 1e-10


def _jit(func):
    return _accel.njit(func) or func


@_jit
def _rbf_row(X, i, sigma, out):
    N, n = X.shape
    for k in range(N):
        d = 0.0
        for t in range(n):
            diff = X[i, t] - X[k, t]
            d += diff * diff
        out[k] = math.exp(-sigma * d)


@_jit
def _fetch_row(X, i, pin, sigma, cache, slot_of, owner, stamp, clock, stats):
    """Return the cache slot holding kernel row ``i``; never evict slot ``pin``."""
    s = slot_of[i]
    if s >= 0:
        stamp[s] = clock
        stats[0] += 1
        return s
    n_slots = cache.shape[0]
    s = -1
    for t in range(n_slots):
        if owner[t] < 0:
            s = t
            break
    if s < 0:
        best = 0
        first = True
        for t in range(n_slots):
            if t == pin:
                continue
            if first or stamp[t] < best:
                best = stamp[t]
                s = t
                first = False
        slot_of[owner[s]] = -1
    owner[s] = i
    slot_of[i] = s
    stamp[s] = clock
    stats[1] += 1
    _rbf_row(X, i, sigma, cache[s])
    return s


@_jit
def _smo_loop(X, y, Cb, sigma, tol, max_iter, n_slots):
    N = X.shape[0]
    n_slots = max(2, min(n_slots, N))
    alpha = np.zeros(N)
    G = -np.ones(N)
    cache = np.empty((n_slots, N))
    slot_of = -np.ones(N, dtype=np.int64)
    owner = -np.ones(n_slots, dtype=np.int64)
    stamp = np.zeros(n_slots, dtype=np.int64)
    stats = np.zeros(3, dtype=np.int64)  # cache hits, misses, monotonicity violations
    f = 0.0
    gap = np.inf
    it = 0
    status = STATUS_MAX_ITER
    while it < max_iter:
        # maximal violating pair
        i = -1
        j = -1
        gmax = -np.inf
        gmin = np.inf
        for k in range(N):
            v = -y[k] * G[k]
            if (y[k] > 0 and alpha[k] < Cb[k]) or (y[k] < 0 and alpha[k] > 0):
                if v > gmax:
                    gmax = v
                    i = k
            if (y[k] > 0 and alpha[k] > 0) or (y[k] < 0 and alpha[k] < Cb[k]):
                if v < gmin:
                    gmin = v
                    j = k
        gap = gmax - gmin
        if i < 0 or j < 0 or gap <= tol:
            status = STATUS_OK
            break
        it += 1
        si = _fetch_row(X, i, -1, sigma, cache, slot_of, owner, stamp, it, stats)
        sj = _fetch_row(X, j, si, sigma, cache, slot_of, owner, stamp, it, stats)
        Ki = cache[si]
        Kj = cache[sj]
        Kij = Ki[j]
        quad = Ki[i] + Kj[j] - 2.0 * Kij
        if quad <= 0:
            quad = TAU
        old_ai = alpha[i]
        old_aj = alpha[j]
        Ci = Cb[i]
        Cj = Cb[j]
        ai = old_ai
        aj = old_aj
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj = 0.0
                    ai = diff
            else:
                if ai < 0:
                    ai = 0.0
                    aj = -diff
            if diff > Ci - Cj:
                if ai > Ci:
                    ai = Ci
                    aj = Ci - diff
            else:
                if aj > Cj:
                    aj = Cj
                    ai = Cj + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ai -= delta
            aj += delta
            if total > Ci:
                if ai > Ci:
                    ai = Ci
                    aj = total - Ci
            else:
                if aj < 0:
                    aj = 0.0
                    ai = total
            if total > Cj:
                if aj > Cj:
                    aj = Cj
                    ai = total - Cj
            else:
                if ai < 0:
                    ai = 0.0
                    aj = total
        dai = ai - old_ai
        daj = aj - old_aj
        Qij = y[i] * y[j] * Kij
        df = G[i] * dai + G[j] * daj + 0.5 * (Ki[i] * dai * dai + Kj[j] * daj * daj) + Qij * dai * daj
        if df > MONOTONE_SLACK * (1.0 + abs(f)):
            stats[2] += 1
        f += df
        alpha[i] = ai
        alpha[j] = aj
        ci = y[i] * dai
        cj = y[j] * daj
        for k in range(N):
            G[k] += y[k] * (ci * Ki[k] + cj * Kj[k])
    return alpha, G, it, status, gap, stats


def _smo_numpy(X, y, Cb, sigma, tol, max_iter, n_slots):
    """Vectorised per-iteration variant of :func:`_smo_loop` (no numba)."""
    N = X.shape[0]
    n_slots = max(2, min(n_slots, N))
    alpha = np.zeros(N)
    G = -np.ones(N)
    cache = np.empty((n_slots, N))
    slot_of = -np.ones(N, dtype=np.int64)
    owner = -np.ones(n_slots, dtype=np.int64)
    stamp = np.zeros(n_slots, dtype=np.int64)
    stats = np.zeros(3, dtype=np.int64)
    pos = y > 0
    f = 0.0
    gap = np.inf
    it = 0
    status = STATUS_MAX_ITER

    def row(i, pin, clock):
        s = slot_of[i]
        if s >= 0:
            stamp[s] = clock
            stats[0] += 1
            return s
        free = np.flatnonzero(owner < 0)
        if free.size:
            s = int(free[0])
        else:
            st = stamp.copy()
            if pin >= 0:
                st[pin] = np.iinfo(np.int64).max
            s = int(np.argmin(st))
            slot_of[owner[s]] = -1
        owner[s] = i
        slot_of[i] = s
        stamp[s] = clock
        stats[1] += 1
        d = X - X[i]
        cache[s] = np.exp(-sigma * np.einsum("ij,ij->i", d, d))
        return s

    while it < max_iter:
        v = -y * G
        up = np.where(pos, alpha < Cb, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < Cb)
        if not up.any() or not low.any():
            status = STATUS_OK
            break
        vu = np.where(up, v, -np.inf)
        vl = np.where(low, v, np.inf)
        i = int(np.argmax(vu))
        j = int(np.argmin(vl))
        gap = vu[i] - vl[j]
        if gap <= tol:
            status = STATUS_OK
            break
        it += 1
        si = row(i, -1, it)
        sj = row(j, si, it)
        Ki = cache[si]
        Kj = cache[sj]
        Kij = Ki[j]
        quad = Ki[i] + Kj[j] - 2.0 * Kij
        if quad <= 0:
            quad = TAU
        old_ai, old_aj = alpha[i], alpha[j]
        Ci, Cj = Cb[i], Cb[j]
        ai, aj = old_ai, old_aj
        if y[i] != y[j]:
            delta = (-G[i] - G[j]) / quad
            diff = ai - aj
            ai += delta
            aj += delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > Ci - Cj:
                if ai > Ci:
                    ai, aj = Ci, Ci - diff
            elif aj > Cj:
                aj, ai = Cj, Cj + diff
        else:
            delta = (G[i] - G[j]) / quad
            total = ai + aj
            ai -= delta
            aj += delta
            if total > Ci:
                if ai > Ci:
                    ai, aj = Ci, total - Ci
            elif aj < 0:
                aj, ai = 0.0, total
            if total > Cj:
                if aj > Cj:
                    aj, ai = Cj, total - Cj
            elif ai < 0:
                ai, aj = 0.0, total
        dai = ai - old_ai
        daj = aj - old_aj
        Qij = y[i] * y[j] * Kij
        df = G[i] * dai + G[j] * daj + 0.5 * (Ki[i] * dai * dai + Kj[j] * daj * daj) + Qij * dai * daj
        if df > MONOTONE_SLACK * (1.0 + abs(f)):
            stats[2] += 1
        f += df
        alpha[i] = ai
        alpha[j] = aj
        G += y * ((y[i] * dai) * Ki + (y[j] * daj) * Kj)
    return alpha, G, it, status, gap, stats


def smo_numba(X, y, Cb, sigma, tol, max_iter, n_slots):
    if not _accel.HAVE_NUMBA:  # pragma: no cover
        raise RuntimeError("numba is not installed")
    return _smo_loop(np.ascontiguousarray(X, dtype=np.float64), np.ascontiguousarray(y, dtype=np.float64),
                    np.ascontiguousarray(Cb, dtype=np.float64), float(sigma), float(tol),
                    int(max_iter), int(n_slots))


def smo_numpy(X, y, Cb, sigma, tol, max_iter, n_slots):
    return _smo_numpy(np.ascontiguousarray(X, dtype=np.float64), np.asarray(y, dtype=np.float64),
                      np.asarray(Cb, dtype=np.float64), float(sigma), float(tol), int(max_iter), int(n_slots))


smo_solve = smo_numba if _accel.USE_NUMBA else smo_numpy


def rbf_matrix(A: np.ndarray, B: np.ndarray, sigma: float, chunk: int = 4096) -> np.ndarray:
    """Dense kernel block exp(-sigma |a - b|^2) using BLAS for the cross term."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    bb = np.einsum("ij,ij->i", B, B)
    out = np.empty((A.shape[0], B.shape[0]))
    for s in range(0, A.shape[0], chunk):
        a = A[s:s + chunk]
        d = np.einsum("ij,ij->i", a, a)[:, None] + bb[None, :] - 2.0 * (a @ B.T)
        np.maximum(d, 0.0, out=d)
        out[s:s + chunk] = np.exp(-sigma * d)
    return out
