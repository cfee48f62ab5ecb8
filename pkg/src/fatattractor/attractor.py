"""Forward orbits of ``F(x, s) = (T x, lam s + A(x))`` and the cloud's upper boundary.

Doubling a double loses one bit per step and lands on 0 after ~52 steps, so
the base orbit is built from an exact digit stream instead: ``x_k`` is the
fixed-point number read from digits ``k .. k + W - 1``, and ``T`` is a shift
of the stream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import _kernels
from .potentials import Potential


def digit(x: float, d: int = 2) -> int:
    """Branch index ``floor(d x)``; the branch intervals are ``[i/d, (i+1)/d)``."""
    if not 0.0 <= x < 1.0:
        raise ValueError(f"x must lie in [0, 1), got {x}")
    return int(math.floor(d * x))


def _window(d: int) -> int:
    # digits needed to fill a double mantissa
    return int(math.ceil(54 / math.log2(d))) + 1


def sqrt2_digits(n: int, d: int = 2) -> np.ndarray:
    """First ``n`` base-``d`` digits of ``sqrt(2) - 1``, exactly."""
    scale = d**n
    v = math.isqrt(2 * scale * scale) - scale
    out = np.empty(n, dtype=np.int64)
    for k in range(n - 1, -1, -1):
        v, out[k] = divmod(v, d)
    return out


def float_digits(x0: float, n: int, d: int = 2, rng: np.random.Generator | None = None) -> np.ndarray:
    """Exact base-``d`` digits of the double ``x0``; digits past its expansion come from ``rng``."""
    if not 0.0 <= x0 < 1.0:
        raise ValueError(f"x0 must lie in [0, 1), got {x0}")
    num, den = float(x0).as_integer_ratio()
    out = np.empty(n, dtype=np.int64)
    k = 0
    while k < n and num:
        num *= d
        out[k], num = divmod(num, den)
        k += 1
    if k < n:
        # a double is d-adic-rational for d = 2; pad so the orbit does not die at 0
        out[k:] = (rng or np.random.default_rng(0)).integers(0, d, n - k)
    return out


def digit_stream(n: int, d: int = 2, x0: float | None = None, seed: int | None = None) -> np.ndarray:
    """Digits for ``n`` orbit points: sqrt(2) - 1 by default, uniform random with ``seed``."""
    m = n + _window(d)
    if x0 is None and seed is None:
        return sqrt2_digits(m, d)
    rng = np.random.default_rng(seed) if seed is not None else None
    if x0 is None:
        return rng.integers(0, d, m)
    return float_digits(x0, m, d, rng)


def orbit_from_digits(digits: np.ndarray, n: int, d: int = 2) -> np.ndarray:
    """``x_k = sum_j digits[k + j] d^-(j+1)`` for k < n, truncated to a double."""
    w = _window(d)
    if digits.size < n + w - 1:
        raise ValueError("digit stream too short")
    weights = float(d) ** -np.arange(1, w + 1)
    x = sliding_window_view(digits[: n + w - 1].astype(float), w) @ weights
    return np.minimum(x, np.nextafter(1.0, 0.0))


@dataclass(frozen=True, eq=False)
class AttractorCloud:
    x: np.ndarray
    s: np.ndarray
    burn_in: int
    params: dict = field(default_factory=dict)

    @property
    def points(self) -> np.ndarray:
        return np.column_stack([self.x, self.s])

    def __len__(self) -> int:
        return self.x.size


def iterate_F(
    A: Potential,
    lam: float,
    d: int = 2,
    x0: float | None = None,
    s0: float = 0.0,
    n: int = 4000,
    burn: int = 0,
    seed: int | None = None,
) -> AttractorCloud:
    """``n`` iterates of ``F`` from ``(x0, s0)``; the first ``burn`` are dropped."""
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    if not n > burn >= 0:
        raise ValueError("need n > burn >= 0")
    x = orbit_from_digits(digit_stream(n, d, x0, seed), n, d)
    s = _kernels.affine_scan(np.asarray(A(x[:-1]), dtype=float), lam, float(s0))
    bound = A.sup_norm() / (1.0 - lam) + lam ** np.arange(n) * abs(s0)
    if np.any(np.abs(s) > bound * (1 + 1e-12) + 1e-12):
        raise ArithmeticError("fibre coordinate left the absorbing interval")
    params = {"lambda": lam, "potential": A.name, "d": d, "seed": seed, "x0": x0, "s0": s0, "n": n}
    return AttractorCloud(x[burn:], s[burn:], burn, params)


def check_orbit(cloud: AttractorCloud, A: Potential) -> float:
    """Largest defect of ``(x_{k+1}, s_{k+1}) = F(x_k, s_k)`` along the cloud (x mod 1)."""
    d, lam = cloud.params["d"], cloud.params["lambda"]
    dx = (d * cloud.x[:-1]) % 1.0 - cloud.x[1:]
    dx = np.minimum(np.abs(dx), 1.0 - np.abs(dx))
    ds = np.abs(lam * cloud.s[:-1] + A(cloud.x[:-1]) - cloud.s[1:])
    return float(max(dx.max(initial=0.0), ds.max(initial=0.0)))


def fiber_order(A: Potential, lam: float, s: float, t: float, n: int = 4000, d: int = 2, x0: float | None = None,
                seed: int | None = None) -> tuple[bool, int | None]:
    """Run ``(x0, s)`` and ``(x0, t)``, ``s < t``, over the same base orbit.

    Returns whether ``s_k <= t_k`` for every k and the first k at which the
    two fibre coordinates coincide in floating point (None if never).
    """
    if not s < t:
        raise ValueError("need s < t")
    x = orbit_from_digits(digit_stream(n, d, x0, seed), n, d)
    forcing = np.asarray(A(x[:-1]), dtype=float)
    lo = _kernels.affine_scan(forcing, lam, s)
    hi = _kernels.affine_scan(forcing, lam, t)
    merged = np.flatnonzero(lo == hi)
    return bool(np.all(lo <= hi)), (int(merged[0]) if merged.size else None)


@dataclass(frozen=True, eq=False)
class Boundary:
    centers: np.ndarray
    smax: np.ndarray  # nan on empty bins
    x_at_max: np.ndarray
    count: np.ndarray

    @property
    def empty(self) -> np.ndarray:
        return self.count == 0

    def rows(self):
        for c, m, k in zip(self.centers, self.smax, self.count):
            yield float(c), float(m), int(k)


def upper_boundary(cloud: AttractorCloud, bins: int = 20) -> Boundary:
    """Per-bin maximum of ``s`` over ``bins`` equal bins of [0, 1)."""
    if bins < 2:
        raise ValueError("bins must be >= 2")
    if len(cloud) == 0:
        raise ValueError("every bin is empty")
    idx = np.minimum((cloud.x * bins).astype(np.int64), bins - 1)
    count = np.bincount(idx, minlength=bins)
    smax = np.full(bins, np.nan)
    xat = np.full(bins, np.nan)
    order = np.lexsort((cloud.s, idx))  # by bin, then s; last in each bin is its max
    last = np.flatnonzero(np.r_[idx[order][1:] != idx[order][:-1], True])
    top = order[last]
    smax[idx[top]] = cloud.s[top]
    xat[idx[top]] = cloud.x[top]
    return Boundary((np.arange(bins) + 0.5) / bins, smax, xat, count)


@dataclass(frozen=True)
class BoundaryCheck:
    max_excess: float  # max over bins of smax - b(x_at_max)
    max_gap: float  # max over well-visited bins of |smax - b(x_at_max)|
    visited: int

    def ok(self, tol: float = 5e-3) -> bool:
        return self.max_excess <= tol and self.max_gap <= tol


def compare_boundary(bd: Boundary, b, min_hits: int = 20) -> BoundaryCheck:
    full = ~bd.empty
    diff = bd.smax[full] - np.asarray(b(bd.x_at_max[full]))
    busy = bd.count[full] >= min_hits
    gap = float(np.max(np.abs(diff[busy]))) if np.any(busy) else 0.0
    return BoundaryCheck(float(np.max(diff)), gap, int(np.sum(busy)))
