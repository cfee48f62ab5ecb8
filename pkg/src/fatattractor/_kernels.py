"""Hot loops: discounted Bellman sweeps and the fibre recursion of F.

Each kernel has a numba version and a pure-numpy version with identical
semantics. Numba is used when importable unless ``FATATTRACTOR_NO_NUMBA`` is
set to a truthy value; ``USE_NUMBA`` reports the active choice.
"""

from __future__ import annotations

import os

import numpy as np
from scipy.signal import lfilter

_DISABLED = os.environ.get("FATATTRACTOR_NO_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLED


# --- numpy reference versions -------------------------------------------------


def bellman_step_numpy(v, pot, lo, hi, w, lam):
    """``out[j] = max_i pot[i, j] + lam * ((1 - w) v[lo] + w v[hi])[i, j]``; also returns argmax."""
    cand = pot + lam * ((1.0 - w) * v[lo] + w * v[hi])
    arg = np.argmax(cand[::-1], axis=0)
    arg = cand.shape[0] - 1 - arg  # ties go to the largest branch index
    return cand[arg, np.arange(cand.shape[1])], arg


def value_iteration_numpy(v, pot, lo, hi, w, lam, stop, max_iter):
    diff = np.inf
    it = 0
    while it < max_iter:
        nv, _ = bellman_step_numpy(v, pot, lo, hi, w, lam)
        it += 1
        diff = float(np.max(np.abs(nv - v)))
        v = nv
        if diff <= stop:
            break
    return v, it, diff


def affine_scan_numpy(forcing, lam, s0):
    """``s[0] = s0``, ``s[k+1] = lam s[k] + forcing[k]``; returns len(forcing) + 1 values."""
    forcing = np.asarray(forcing, dtype=float)
    out = np.empty(forcing.size + 1)
    out[0] = s0
    if forcing.size:
        out[1:], _ = lfilter([1.0], [1.0, -lam], forcing, zi=[lam * s0])
    return out


# --- numba versions --------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def bellman_step_numba(v, pot, lo, hi, w, lam):
        d, n = pot.shape
        out = np.empty(n)
        arg = np.empty(n, dtype=np.int64)
        for j in range(n):
            best = -np.inf
            bi = 0
            for i in range(d):
                c = pot[i, j] + lam * ((1.0 - w[i, j]) * v[lo[i, j]] + w[i, j] * v[hi[i, j]])
                if c >= best:
                    best = c
                    bi = i
            out[j] = best
            arg[j] = bi
        return out, arg

    @njit(cache=True)
    def value_iteration_numba(v, pot, lo, hi, w, lam, stop, max_iter):
        d, n = pot.shape
        cur = v.copy()
        nxt = np.empty(n)
        diff = np.inf
        it = 0
        while it < max_iter:
            diff = 0.0
            for j in range(n):
                best = -np.inf
                for i in range(d):
                    c = pot[i, j] + lam * ((1.0 - w[i, j]) * cur[lo[i, j]] + w[i, j] * cur[hi[i, j]])
                    if c > best:
                        best = c
                nxt[j] = best
                e = abs(best - cur[j])
                if e > diff:
                    diff = e
            cur, nxt = nxt, cur
            it += 1
            if diff <= stop:
                break
        return cur, it, diff

    @njit(cache=True)
    def affine_scan_numba(forcing, lam, s0):
        n = forcing.shape[0]
        out = np.empty(n + 1)
        out[0] = s0
        s = s0
        for k in range(n):
            s = lam * s + forcing[k]
            out[k + 1] = s
        return out

else:  # pragma: no cover - exercised only without numba installed
    bellman_step_numba = bellman_step_numpy
    value_iteration_numba = value_iteration_numpy
    affine_scan_numba = affine_scan_numpy


if USE_NUMBA:
    bellman_step = bellman_step_numba
    value_iteration = value_iteration_numba
    affine_scan = affine_scan_numba
else:
    bellman_step = bellman_step_numpy
    value_iteration = value_iteration_numpy
    affine_scan = affine_scan_numpy
