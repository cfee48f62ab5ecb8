"""Symbolic series ``S(x, a) = sum_k lam^k A(tau_{k,a} x)`` and the finite envelope.

The upper boundary ``b`` is ``max_a S(., a)``; for the potentials of interest a
small family of eventually periodic itineraries suffices, each winning on an
interval. Everything here is evaluated directly from the series, independent
of the grid solver, so the two can check each other.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from math import ceil
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from .potentials import Potential, deriv_sup_norm
from .symbolic import SymbolSeq, concat, cycle_point, cycle_points, first_difference, shift

DEFAULT_TOL = 1e-13
FIGURE_DEPTH = 8  # published figures cut the itinerary after a_7


class EnvelopeError(ValueError):
    pass


class CrossingError(ValueError):
    pass


@lru_cache(maxsize=64)
def _lip(A: Potential) -> float:
    return max(deriv_sup_norm(A, 2048), 1e-300)


@lru_cache(maxsize=64)
def _supnorm(A: Potential) -> float:
    return A.sup_norm(2048)


@dataclass(frozen=True)
class SeriesValue:
    value: float
    tail_bound: float
    depth: int

    def __float__(self) -> float:
        return self.value

    def __sub__(self, other: "SeriesValue") -> "SeriesValue":
        return SeriesValue(self.value - other.value, self.tail_bound + other.tail_bound, max(self.depth, other.depth))


@lru_cache(maxsize=4096)
def _closure_steps(A: Potential, lam: float, a: SymbolSeq, tol: float) -> int:
    """Steps to sum explicitly before replacing the orbit by its limit cycle."""
    d, m0, p = a.d, len(a.preperiod), len(a.period)
    scale = _lip(A) / (d - lam)
    k = 1
    while lam ** (m0 + k) * scale * float(d) ** (-k) > tol and k < 2000:
        k += 1
    return m0 + p * ceil(k / p)


def series_sum(A: Potential, lam: float, x, a: SymbolSeq, tol: float = DEFAULT_TOL, depth: int | None = None):
    """Vectorised ``S(x, a)``; returns ``(values, tail_bound, depth)``.

    With ``depth`` given the sum is cut after that many terms (the tail bound
    is then ``lam^depth ||A|| / (1 - lam)``). Otherwise the orbit is followed
    until it is within the Lipschitz tolerance of the limit cycle of the
    periodic part, and the remaining terms are summed in closed form.
    """
    x = np.asarray(x, dtype=float)
    d = a.d
    y = x.copy()
    total = np.zeros_like(x)
    if depth is not None:
        for k in range(depth):
            y = (y + a[k]) / d
            total = total + lam**k * A(y)
        return total, lam**depth * _supnorm(A) / (1.0 - lam), depth
    m = _closure_steps(A, lam, a, tol)
    for k in range(m):
        y = (y + a[k]) / d
        total = total + lam**k * A(y)
    p = len(a.period)
    zs = np.asarray(cycle_points(a))
    cycle = float(np.sum(lam ** np.arange(p) * np.atleast_1d(A(zs))))
    total = total + lam**m * cycle / (1.0 - lam**p)
    dist = float(np.max(np.abs(y - cycle_point(a)))) if y.size else 0.0
    bound = lam**m * _lip(A) * dist / (d - lam)
    return total, bound, m


def series_truncated(A: Potential, lam: float, x, a: SymbolSeq, tol: float = DEFAULT_TOL):
    """Plain partial sum with ``lam^N ||A|| / (1 - lam) <= tol``; no cycle closure."""
    norm = _supnorm(A)
    n = 1
    while lam**n * norm / (1.0 - lam) > tol:
        n += 1
    return series_sum(A, lam, x, a, depth=n)


def s_value(A: Potential, lam: float, x: float, a: SymbolSeq, tol: float = DEFAULT_TOL, depth: int | None = None) -> SeriesValue:
    val, bound, m = series_sum(A, lam, float(x), a, tol, depth)
    return SeriesValue(float(val), float(bound), m)


def s_values(A: Potential, lam: float, xs, a: SymbolSeq, tol: float = DEFAULT_TOL, depth: int | None = None) -> np.ndarray:
    return series_sum(A, lam, xs, a, tol, depth)[0]


def s_cocycle_check(A: Potential, lam: float, x: float, a: SymbolSeq, tol: float = DEFAULT_TOL) -> float:
    """``|S(T x, pi(x) a) - A(x) - lam S(x, a)|`` for ``x`` off the branch boundaries."""
    d = a.d
    if np.isclose(x * d, round(x * d), rtol=0.0, atol=1e-15):
        raise ValueError(f"x={x} lies on a branch boundary")
    i = int(np.floor(d * x))
    tx = d * x - i
    lhs = s_value(A, lam, tx, concat(i, a), tol).value
    return abs(lhs - A(x) - lam * s_value(A, lam, x, a, tol).value)


def w_value(A: Potential, lam: float, x: float, a: SymbolSeq, xbar: float = 0.0, tol: float = DEFAULT_TOL) -> SeriesValue:
    """Involution kernel ``W(x, a) = S(x, a) - S(xbar, a)``."""
    if x == xbar:
        return SeriesValue(0.0, 0.0, 0)
    return s_value(A, lam, x, a, tol) - s_value(A, lam, xbar, a, tol)


def s_deriv(A: Potential, lam: float, x, a: SymbolSeq, tol: float = DEFAULT_TOL):
    """``dS/dx = (1/d) sum_k (lam/d)^k A'(tau_{k,a} x)``, truncated by its tail bound."""
    if A.deriv1 is None:
        raise ValueError(f"potential {A.name} has no analytic derivative")
    d = a.d
    r = lam / d
    norm = _lip(A)
    n = 1
    while r**n * norm / (1.0 - r) / d > tol:
        n += 1
    x = np.asarray(x, dtype=float)
    y = x.copy()
    total = np.zeros_like(x)
    for k in range(n):
        y = (y + a[k]) / d
        total = total + r**k * A.d1(y)
    total = total / d
    return float(total) if total.ndim == 0 else total


def delta(A: Potential, lam: float, x, a: SymbolSeq, b: SymbolSeq, tol: float = DEFAULT_TOL):
    """``(S(x,a) - S(x,b), dS/dx(x,a) - dS/dx(x,b))``."""
    if a == b:
        return 0.0, 0.0
    dv = s_value(A, lam, x, a, tol).value - s_value(A, lam, x, b, tol).value
    dd = s_deriv(A, lam, x, a, tol) - s_deriv(A, lam, x, b, tol) if A.deriv1 is not None else float("nan")
    return dv, dd


def crossing_point(
    A: Potential, lam: float, a: SymbolSeq, b: SymbolSeq, bracket=(0.0, 1.0), xtol: float = 1e-10, tol: float = DEFAULT_TOL
) -> float:
    """Root of ``S(., a) - S(., b)`` in ``bracket`` (Brent's method)."""
    if a == b:
        raise CrossingError("identical sequences never cross transversally")
    lo, hi = bracket

    def f(x):
        return s_value(A, lam, x, a, tol).value - s_value(A, lam, x, b, tol).value

    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return float(lo)
    if fhi == 0.0:
        return float(hi)
    if np.sign(flo) == np.sign(fhi):
        raise CrossingError(f"no crossing in bracket [{lo}, {hi}] for {a} vs {b}")
    return float(brentq(f, lo, hi, xtol=xtol))


class AngleCheck(NamedTuple):
    lhs: float
    rhs: float
    ok: bool
    n: int


def angle_bound_check(A: Potential, lam: float, a: SymbolSeq, b: SymbolSeq, x: float, tol: float = DEFAULT_TOL) -> AngleCheck:
    """Compare ``|Delta'(x)|`` with ``||A'|| (lam/2)^n 2 / (2 - lam)``, n the first differing digit."""
    n = first_difference(a, b)
    if n is None:
        raise ValueError("angle bound needs two different sequences")
    lhs = abs(delta(A, lam, x, a, b, tol)[1])
    rhs = deriv_sup_norm(A) * (lam / 2) ** n * 2.0 / (2.0 - lam)
    return AngleCheck(lhs, rhs, lhs <= rhs + 1e-12, n)


def candidates(d: int = 2, period_max: int = 3, preperiod_max: int = 2) -> list[SymbolSeq]:
    """All canonical eventually periodic words with bounded period and preperiod, sorted ascending."""
    if period_max < 1:
        raise ValueError("period_max must be >= 1")
    seen = set()
    for q in range(1, period_max + 1):
        for per in product(range(d), repeat=q):
            for m in range(preperiod_max + 1):
                for pre in product(range(d), repeat=m):
                    seen.add(SymbolSeq(pre, per, d))
    return sorted(seen)


@dataclass(frozen=True)
class EnvelopePiece:
    seq: SymbolSeq
    l: float
    r: float

    def to_dict(self) -> dict:
        return {"seq": str(self.seq), "l": self.l, "r": self.r}


@dataclass(frozen=True, eq=False)
class Envelope:
    """``b(x) = S(x, piece.seq)`` on each piece; a switch point belongs to the left piece."""

    A: Potential
    lam: float
    pieces: tuple[EnvelopePiece, ...]
    tol: float = DEFAULT_TOL
    depth: int | None = None

    @property
    def switch_points(self) -> list[float]:
        return [p.r for p in self.pieces[:-1]]

    @property
    def sequences(self) -> list[SymbolSeq]:
        return [p.seq for p in self.pieces]

    def piece_index(self, x) -> np.ndarray:
        rights = np.array([p.r for p in self.pieces[:-1]])
        return np.searchsorted(rights, np.asarray(x, dtype=float), side="left")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = self.piece_index(x)
        out = np.empty(x.shape)
        for k, piece in enumerate(self.pieces):
            mask = idx == k
            if np.any(mask):
                out[mask] = s_values(self.A, self.lam, x[mask], piece.seq, self.tol, self.depth)
        return float(out) if out.ndim == 0 else out

    def to_dicts(self) -> list[dict]:
        return [p.to_dict() for p in self.pieces]


def _argmax_greatest(vals: np.ndarray, tie_tol: float) -> np.ndarray:
    # rows are sorted ascending lexicographically; prefer the last row within tie_tol of the max
    best = vals.max(axis=0)
    within = vals >= best - tie_tol
    return vals.shape[0] - 1 - np.argmax(within[::-1], axis=0)


def envelope(
    A: Potential,
    lam: float,
    cands: Iterable[SymbolSeq],
    n: int = 2048,
    tol: float = DEFAULT_TOL,
    depth: int | None = None,
    tie_tol: float = 1e-12,
    min_width: float = 1e-8,
) -> Envelope:
    """Upper envelope of ``S(., c)`` over ``cands``.

    The argmax is taken on ``j / n`` (j = 0..n); each change of argmax is
    refined to the crossing of the two adjacent curves by Brent root-finding on a
    bracket of one grid cell either side.
    """
    cands = sorted(set(cands))
    if not cands:
        raise EnvelopeError("empty candidate family")
    xs = np.linspace(0.0, 1.0, n + 1)
    vals = np.vstack([s_values(A, lam, xs, c, tol, depth) for c in cands])
    arg = _argmax_greatest(vals, tie_tol * (1.0 + _supnorm(A)))
    change = np.flatnonzero(arg[1:] != arg[:-1])
    pieces = []
    left = 0.0
    h = 1.0 / n
    for j in change:
        a, b = cands[arg[j]], cands[arg[j + 1]]
        lo, hi = max(0.0, xs[j] - h), min(1.0, xs[j + 1] + h)
        try:
            if depth is None:
                sw = crossing_point(A, lam, a, b, (lo, hi), tol=tol)
            else:
                f = lambda x: s_value(A, lam, x, a, tol, depth).value - s_value(A, lam, x, b, tol, depth).value  # noqa: E731
                sw = float(brentq(f, lo, hi, xtol=1e-10))
        except (CrossingError, ValueError):
            sw = 0.5 * (xs[j] + xs[j + 1])
        sw = min(max(sw, left), 1.0)
        pieces.append(EnvelopePiece(a, left, sw))
        left = sw
    pieces.append(EnvelopePiece(cands[arg[-1]], left, 1.0))
    return Envelope(A, lam, _tidy(pieces, min_width), tol, depth)


def _tidy(pieces: list[EnvelopePiece], min_width: float) -> tuple[EnvelopePiece, ...]:
    """Drop slivers produced by exact ties at single nodes and merge equal neighbours."""
    kept = [p for p in pieces if p.r - p.l > min_width] or pieces[:1]
    out: list[EnvelopePiece] = []
    for p in kept:
        if out and out[-1].seq == p.seq:
            out[-1] = EnvelopePiece(p.seq, out[-1].l, p.r)
        elif out:
            out[-1] = EnvelopePiece(out[-1].seq, out[-1].l, p.l)
            out.append(p)
        else:
            out.append(EnvelopePiece(p.seq, 0.0, p.r))
    out[-1] = EnvelopePiece(out[-1].seq, out[-1].l, 1.0)
    return tuple(out)


def _check_coverage(env: Envelope, eps: float = 1e-12) -> None:
    ps = env.pieces
    if not ps:
        raise EnvelopeError("envelope has no pieces")
    if abs(ps[0].l) > eps or abs(ps[-1].r - 1.0) > eps:
        raise EnvelopeError(f"pieces cover [{ps[0].l}, {ps[-1].r}], not [0, 1]")
    for p, q in zip(ps, ps[1:]):
        if abs(p.r - q.l) > eps or p.r < p.l:
            raise EnvelopeError(f"gap or overlap between pieces at {p.r} / {q.l}")


class EnvelopeCheck(NamedTuple):
    residual: float
    invariance_residual: float


def validate_envelope(env: Envelope, n: int = 1024, samples: int = 16) -> EnvelopeCheck:
    """Calibration residual ``max_x |b(x) - max_i (lam b(tau_i x) + A(tau_i x))|`` on ``j / n``.

    Also checks that dropping the first digit of each piece lands on an
    optimal pair: ``b(tau_{a_0} x) = S(tau_{a_0} x, sigma a)`` inside every piece.
    """
    _check_coverage(env)
    A, lam = env.A, env.lam
    d = env.pieces[0].seq.d
    xs = np.arange(n) / n
    pre = (xs[None, :] + np.arange(d)[:, None]) / d
    rhs = np.max(lam * env(pre) + A(pre), axis=0)
    residual = float(np.max(np.abs(env(xs) - rhs)))
    inv = 0.0
    for piece in env.pieces:
        if piece.r - piece.l <= 1e-12:
            continue
        t = piece.l + (piece.r - piece.l) * (np.arange(samples) + 0.5) / samples
        y = (t + piece.seq[0]) / d
        lhs = env(y)
        rhs_ = s_values(A, lam, y, shift(piece.seq), env.tol, env.depth)
        inv = max(inv, float(np.max(np.abs(lhs - rhs_))))
    return EnvelopeCheck(residual, inv)


TEN = SymbolSeq((), (1, 0))
ZERO_ONE = SymbolSeq((), (0, 1))


def symmetric_envelope(A: Potential, lam: float, tol: float = DEFAULT_TOL, samples: int = 256) -> Envelope:
    """Two-piece envelope ``S(., (10)^inf)`` on [0, 1/2], ``S(., (01)^inf)`` on [1/2, 1].

    Requires ``A(1 - x) = A(x)``. Unless the potential is known to be twist, the
    single transversal crossing of the two curves at 1/2 is checked on a sample grid.
    """
    if not A.symmetric:
        raise ValueError(f"potential {A.name} is not symmetric")
    if A.twist is False:
        raise ValueError(f"potential {A.name} is not twist")
    if A.twist is None:
        # the two curves must cross once, transversally, at 1/2
        xs = np.linspace(0.0, 1.0, samples + 1)
        dv = s_values(A, lam, xs, TEN, tol) - s_values(A, lam, xs, ZERO_ONE, tol)
        slope = s_deriv(A, lam, 0.5, TEN, tol) - s_deriv(A, lam, 0.5, ZERO_ONE, tol)
        left, right = dv[xs < 0.5 - 1e-12], dv[xs > 0.5 + 1e-12]
        if not (np.all(left > 0.0) and np.all(right < 0.0) and slope < 0.0):
            raise ValueError(f"(10) and (01) curves do not cross once transversally at 1/2 for {A.name}")
    pieces = (EnvelopePiece(TEN, 0.0, 0.5), EnvelopePiece(ZERO_ONE, 0.5, 1.0))
    return Envelope(A, lam, pieces, tol)


def symmetry_residual(A: Potential, lam: float, n: int = 256, tol: float = DEFAULT_TOL) -> float:
    """``max_x |S(x, (10)^inf) - S(1 - x, (01)^inf)|`` on ``j / n``, j = 0..n."""
    xs = np.linspace(0.0, 1.0, n + 1)
    return float(np.max(np.abs(s_values(A, lam, xs, TEN, tol) - s_values(A, lam, 1.0 - xs, ZERO_ONE, tol))))


class Period3Check(NamedTuple):
    ok: bool
    witness: tuple | None


def period3_condition(u: float, v: float) -> Period3Check:
    """Check ``tau_1[0,u] in [u,v]``, ``tau_1[u,v] in [v,1]``, ``tau_0[v,1] in [0,u]``.

    The witness names the first failing inclusion with both intervals.
    """
    if not 0.0 < u < v < 1.0:
        raise ValueError("need 0 < u < v < 1")
    checks = (
        ("tau1[0,u] in [u,v]", ((0.0 + 1) / 2, (u + 1) / 2), (u, v)),
        ("tau1[u,v] in [v,1]", ((u + 1) / 2, (v + 1) / 2), (v, 1.0)),
        ("tau0[v,1] in [0,u]", (v / 2, 1.0 / 2), (0.0, u)),
    )
    for label, (a, b), (lo, hi) in checks:
        if a < lo or b > hi:
            return Period3Check(False, (label, (a, b), (lo, hi)))
    return Period3Check(True, None)


def period3_anchors() -> tuple[float, float, float]:
    """``x0 < T^2 x0 < T x0`` on the cycle of (110)^inf: 3/7, 5/7, 6/7."""
    pts = sorted(cycle_points(SymbolSeq((), (1, 1, 0))))
    return pts[0], pts[1], pts[2]


class ConcavityCheck(NamedTuple):
    ok: bool
    strict: bool
    max_second_diff: float


def concavity_check(
    A: Potential, lam: float, a: SymbolSeq, n: int = 256, eps: float = 1e-9, tol: float = DEFAULT_TOL, atol: float = 1e-11
) -> ConcavityCheck:
    """Second differences of ``x -> S(x, a)`` on [eps, 1 - eps]."""
    xs = np.linspace(eps, 1.0 - eps, n + 1)
    s = s_values(A, lam, xs, a, tol)
    second = s[2:] - 2 * s[1:-1] + s[:-2]
    mx = float(np.max(second))
    return ConcavityCheck(mx <= atol, mx < -atol, mx)


def sign_changes(values: Sequence[float], atol: float = 0.0) -> int:
    """Number of sign changes, ignoring entries within ``atol`` of zero."""
    s = [np.sign(v) for v in values if abs(v) > atol]
    return sum(1 for p, q in zip(s, s[1:]) if p != q)
