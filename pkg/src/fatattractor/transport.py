"""Dual potential, dual subaction and the optimal-pair structure on ``S^1 x Sigma``.

With a base point ``xbar`` the involution kernel is ``W(x, a) = S(x, a) - S(xbar, a)``,
the dual potential ``A*(a) = S(xbar, a) - lam S(xbar, sigma a)`` and the dual
subaction ``b*(a) = -S(xbar, a)``. This sign of ``A*`` is the one for which the
coboundary equation ``A*(a) = A(tau_{a0} x) + lam W(tau_{a0} x, sigma a) - W(x, a)``
and ``lam b*(sigma a) = b*(a) + A*(a)`` both hold.
The admissibility gap ``p = b* + b - W`` reduces to ``b(x) - S(x, a) >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .potentials import Potential
from .series import DEFAULT_TOL, s_value
from .solver import RECURRENCE_TOL, default_tie_tol, detect_recurrence, rate_at, realizer
from .symbolic import SymbolSeq, shift

Subaction = Callable[[float], float]


@dataclass(eq=False)
class DualEval:
    A: Potential
    lam: float
    xbar: float = 0.0
    tol: float = DEFAULT_TOL
    _cache: dict = field(default_factory=dict, repr=False)

    def s_bar(self, a: SymbolSeq) -> float:
        """``S(xbar, a)``, cached per sequence."""
        v = self._cache.get(a)
        if v is None:
            v = self._cache[a] = s_value(self.A, self.lam, self.xbar, a, self.tol).value
        return v

    def s(self, x: float, a: SymbolSeq) -> float:
        return s_value(self.A, self.lam, x, a, self.tol).value

    def w(self, x: float, a: SymbolSeq) -> float:
        return self.s(x, a) - self.s_bar(a)

    @property
    def potential(self) -> str:
        return self.A.name


def dual_potential(de: DualEval, a: SymbolSeq) -> float:
    return de.s_bar(a) - de.lam * de.s_bar(shift(a))


def dual_subaction(de: DualEval, a: SymbolSeq) -> float:
    return -de.s_bar(a)


def dual_identity_residual(de: DualEval, a: SymbolSeq) -> float:
    """``|lam b*(sigma a) - b*(a) - A*(a)|``."""
    return abs(de.lam * dual_subaction(de, shift(a)) - dual_subaction(de, a) - dual_potential(de, a))


def coboundary_residual(de: DualEval, x: float, a: SymbolSeq) -> float:
    """``|A*(a) - A(tau_{a0} x) - lam W(tau_{a0} x, sigma a) + W(x, a)|``."""
    y = (x + a[0]) / a.d
    rhs = de.A(y) + de.lam * de.w(y, shift(a)) - de.w(x, a)
    return abs(dual_potential(de, a) - rhs)


def admissibility_gap(b: Subaction, de: DualEval, x: float, a: SymbolSeq) -> float:
    """``p(x, a) = (b* + b - W)(x, a)``."""
    return dual_subaction(de, a) + float(b(x)) - de.w(x, a)


def fundamental_relation_residual(b: Subaction, de: DualEval, x: float, a: SymbolSeq) -> float:
    """``|R(tau_{a0} x) - p(x, a) + lam p(tau_{a0} x, sigma a)|`` with ``R = b o T - lam b - A``."""
    y = (x + a[0]) / a.d
    r = rate_at(b, de.A, de.lam, y, a.d)
    return abs(r - admissibility_gap(b, de, x, a) + de.lam * admissibility_gap(b, de, y, shift(a)))


def realizer_gap(b: Subaction, de: DualEval, x: float, depth: int = 200) -> tuple[SymbolSeq | None, float]:
    """Greedy realizer of ``x`` closed into a SymbolSeq, and ``p`` along it."""
    real = realizer(b, de.A, de.lam, x, depth, d=2)
    if real.seq is None:
        return None, float("nan")
    return real.seq, admissibility_gap(b, de, x, real.seq)


@dataclass(frozen=True)
class PlanOrbit:
    orbit: tuple[tuple[float, SymbolSeq, float], ...]
    p_max: float
    period: int | None
    cost_lhs: float
    cost_rhs: float

    def to_dict(self) -> dict:
        return {
            "orbit": [{"x": x, "a": str(a), "p": p} for x, a, p in self.orbit],
            "p_max": self.p_max,
            "cost_lhs": self.cost_lhs,
            "cost_rhs": self.cost_rhs,
            "periodic": {"period": self.period},
        }


class NotOptimalError(ValueError):
    pass


def plan_orbit(de: DualEval, b: Subaction, x0: float, a0: SymbolSeq, n: int = 16, tol: float = 1e-6) -> PlanOrbit:
    """Iterate ``(x, a) -> (tau_{a0} x, sigma a)`` from an optimal pair.

    Every pair along the way must keep ``p <= tol / lam^k``. When the pairs
    recur the cost ``mean(-W)`` over the cycle is compared with
    ``mean(-b*) + mean(-b)``.
    """
    p0 = admissibility_gap(b, de, x0, a0)
    if p0 > tol:
        raise NotOptimalError(f"({x0}, {a0}) is not an optimal pair: p = {p0:.3e}")
    orbit = [(float(x0), a0, p0)]
    x, a = float(x0), a0
    period = None
    for k in range(1, n + 1):
        x, a = (x + a[0]) / a.d, shift(a)
        p = admissibility_gap(b, de, x, a)
        if p > tol / de.lam**k:
            raise NotOptimalError(f"optimality lost after {k} steps: p = {p:.3e}")
        orbit.append((x, a, p))
        hit = detect_recurrence([o[0] for o in orbit], RECURRENCE_TOL)
        if hit is not None and orbit[hit[0]][1] == a:
            period = hit[1] - hit[0]
            break
    cycle = orbit[-period - 1 : -1] if period else orbit
    cost_lhs = float(np.mean([-de.w(x, a) for x, a, _ in cycle]))
    cost_rhs = float(np.mean([-dual_subaction(de, a) for _, a, _ in cycle]) + np.mean([-float(b(x)) for x, _, _ in cycle]))
    p_max = max(abs(p) for _, _, p in orbit)
    return PlanOrbit(tuple(orbit), p_max, period, cost_lhs, cost_rhs)


@dataclass(frozen=True)
class Monotonicity:
    ok: bool
    orientation: str  # "decreasing", "increasing" or "constant"
    violations: tuple[float, ...]
    switches: tuple[float, ...]
    skipped: bool = False


def _prefix(b, A, lam, x, depth, tie_tol):
    r = realizer(b, A, lam, x, depth, tie_tol, 2, stop_on_cycle=False)
    return r.digits, r.all_tied


def realizer_monotonicity(
    b: Subaction, A: Potential, lam: float, n: int = 512, depth: int = 12, xtol: float = 1e-9, tie_tol: float | None = None
) -> Monotonicity:
    """Lexicographic order of realizer prefixes along the midpoints ``(j + 1/2) / n``.

    Each change of prefix is located by bisection. The orientation is read
    off the first change; any later change against it is a violation.
    """
    tie_tol = default_tie_tol(A) if tie_tol is None else tie_tol
    xs = (np.arange(n) + 0.5) / n
    prefixes = []
    tied = 0
    for x in xs:
        p, t = _prefix(b, A, lam, x, depth, tie_tol)
        prefixes.append(p)
        tied += t
    if tied == n:
        return Monotonicity(True, "constant", (), (), skipped=True)
    switches, signs = [], []
    for i in range(n - 1):
        left, right = prefixes[i], prefixes[i + 1]
        if left == right:
            continue
        lo, hi = xs[i], xs[i + 1]
        while hi - lo > xtol:
            mid = 0.5 * (lo + hi)
            if _prefix(b, A, lam, mid, depth, tie_tol)[0] == left:
                lo = mid
            else:
                hi = mid
        switches.append(float(0.5 * (lo + hi)))
        signs.append(1 if right > left else -1)
    if not signs:
        return Monotonicity(True, "constant", (), ())
    first = signs[0]
    bad = tuple(s for s, g in zip(switches, signs) if g != first)
    orientation = "increasing" if first > 0 else "decreasing"
    return Monotonicity(not bad, orientation, bad, tuple(switches))
