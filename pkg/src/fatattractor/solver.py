"""Grid solver for the lambda-calibrated subaction and its diagnostics.

``b`` is the fixed point of ``(L v)(x) = max_i A(tau_i x) + lam * v(tau_i x)``
on the nodes ``x_j = j / n`` with periodic linear interpolation in between.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .potentials import Potential
from .symbolic import SymbolSeq

log = logging.getLogger(__name__)

DEFAULT_GRID = 4096
DEFAULT_TOL = 1e-10
MAX_ITER = 1_000_000
RECURRENCE_TOL = 1e-9
RECURRENCE_WINDOW = 64


class SolverError(RuntimeError):
    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


def _check_lambda(lam: float) -> None:
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")


def _interp_setup(y: np.ndarray, n: int):
    t = np.asarray(y, dtype=float) * n
    base = np.floor(t)
    w = t - base
    lo = base.astype(np.int64) % n
    hi = (lo + 1) % n
    return lo, hi, w


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values at ``j / n``, j = 0..n-1, extended periodically by linear interpolation."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n) / self.n

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi, w = _interp_setup(x - np.floor(x), self.n)
        out = (1.0 - w) * self.values[lo] + w * self.values[hi]
        return float(out) if out.ndim == 0 else out

    def sup_dist(self, other: "GridFunction") -> float:
        if other.n != self.n:
            raise ValueError("grid sizes differ")
        return float(np.max(np.abs(self.values - other.values)))

    def max(self) -> float:
        return float(self.values.max())


class BellmanOperator:
    """Discretised operator with the potential and interpolation stencils precomputed."""

    def __init__(self, A: Potential, lam: float, d: int = 2, n: int = DEFAULT_GRID):
        _check_lambda(lam)
        if n < 2:
            raise ValueError("grid needs at least 2 nodes")
        self.A, self.lam, self.d, self.n = A, lam, d, n
        x = np.arange(n) / n
        pre = (x[None, :] + np.arange(d)[:, None]) / d
        self.preimages = pre
        self.pot = np.ascontiguousarray(np.broadcast_to(A(pre), pre.shape), dtype=float)
        lo, hi, w = _interp_setup(pre, n)
        self.lo, self.hi, self.w = (np.ascontiguousarray(a) for a in (lo, hi, w))

    def candidates(self, v: np.ndarray) -> np.ndarray:
        """``A(tau_i x_j) + lam v(tau_i x_j)`` for every branch i (rows) and node j."""
        return self.pot + self.lam * ((1.0 - self.w) * v[self.lo] + self.w * v[self.hi])

    def __call__(self, v: GridFunction) -> GridFunction:
        out, _ = _kernels.bellman_step(np.asarray(v.values, dtype=float), self.pot, self.lo, self.hi, self.w, self.lam)
        return GridFunction(out)


def bellman_apply(v: GridFunction, A: Potential, lam: float, d: int = 2) -> GridFunction:
    return BellmanOperator(A, lam, d, v.n)(v)


@dataclass(frozen=True, eq=False)
class SolveReport:
    b: GridFunction
    iterations: int
    final_residual: float
    lam: float
    potential: str
    d: int = 2
    tol: float = DEFAULT_TOL

    @property
    def n(self) -> int:
        return self.b.n

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "n": self.n,
            "d": self.d,
            "potential": self.potential,
            "iterations": self.iterations,
            "residual": self.final_residual,
            "max_b": self.b.max(),
        }


def solve_subaction(
    A: Potential,
    lam: float,
    d: int = 2,
    n: int = DEFAULT_GRID,
    tol: float = DEFAULT_TOL,
    max_iter: int = MAX_ITER,
    op: BellmanOperator | None = None,
) -> SolveReport:
    """Value iteration from ``v = 0`` until the a-posteriori error bound is below ``tol``.

    Stops when ``||v_{k+1} - v_k|| <= tol (1 - lam) / lam``, which bounds the
    distance to the discrete fixed point by ``tol``.
    """
    op = op or BellmanOperator(A, lam, d, n)
    stop = tol * (1.0 - lam) / lam
    v, it, diff = _kernels.value_iteration(np.zeros(op.n), op.pot, op.lo, op.hi, op.w, lam, stop, max_iter)
    residual = diff * lam / (1.0 - lam)
    if diff > stop:
        raise SolverError(f"no convergence after {it} iterations (error bound {residual:.3e})", residual, it)
    log.debug("solved %s lam=%g n=%d in %d iterations", A.name, lam, op.n, it)
    return SolveReport(GridFunction(v), int(it), float(residual), lam, A.name, d, tol)


def calibration_residual(b: GridFunction, A: Potential, lam: float, d: int = 2) -> float:
    """``max_j |b(x_j) - (L b)(x_j)|``."""
    return b.sup_dist(bellman_apply(b, A, lam, d))


def coboundary_shift_check(A: Potential, g: GridFunction, lam: float, d: int = 2, tol: float = DEFAULT_TOL) -> float:
    """Solve for ``A`` and for ``A + g(T x) / lam - g(x)``; return ``||b' - (b + g / lam)||``."""
    n = g.n

    def shifted(y):
        y = np.asarray(y, dtype=float)
        return A(y) + g(d * y) / lam - g(y)

    A2 = Potential(f"{A.name}+coboundary", shifted)
    b1 = solve_subaction(A, lam, d, n, tol).b
    b2 = solve_subaction(A2, lam, d, n, tol).b
    return float(np.max(np.abs(b2.values - (b1.values + g.values / lam))))


def rate_function(b: GridFunction, A: Potential, lam: float, d: int = 2) -> GridFunction:
    """``R(z) = b(T z) - lam b(z) - A(z)`` on the nodes; nonnegative up to solver error."""
    z = b.nodes
    return GridFunction(b(d * z) - lam * b.values - A(z))


def rate_at(b: GridFunction, A: Potential, lam: float, z, d: int = 2):
    z = np.asarray(z, dtype=float)
    out = b(d * z) - lam * b(z) - A(z)
    return float(out) if np.ndim(out) == 0 else out


def branch_values(b: GridFunction, A: Potential, lam: float, x, d: int = 2) -> np.ndarray:
    """``lam b(tau_i x) + A(tau_i x)`` for i = 0..d-1 (first axis)."""
    x = np.asarray(x, dtype=float)
    y = (x[None, ...] + np.arange(d).reshape((d,) + (1,) * x.ndim)) / d
    return lam * b(y) + A(y)


def gap_function(b: GridFunction, A: Potential, lam: float) -> GridFunction:
    """Branch gap ``(lam b + A)(tau_1 x) - (lam b + A)(tau_0 x)`` on the nodes (d = 2)."""
    vals = branch_values(b, A, lam, b.nodes, 2)
    return GridFunction(vals[1] - vals[0])


def default_tie_tol(A: Potential) -> float:
    return 1e-9 * (1.0 + A.sup_norm())


@dataclass(frozen=True)
class TurningPoints:
    points: tuple[float, ...]
    degenerate: bool = False

    @property
    def count(self) -> int:
        return len(self.points)


def turning_points(
    b: GridFunction, A: Potential, lam: float, tie_tol: float | None = None, xtol: float = 1e-8
) -> TurningPoints:
    """Zeros of the branch gap on (0, 1): points where both branches attain the maximum.

    Sign changes between nodes are refined by bisection on the interpolated
    gap; runs of nodes within ``tie_tol`` of zero that touch without a sign
    change are reported at their midpoint. The wrap at ``x = 0`` is not a
    turning point (the branch labels swap there) and is never searched.
    """
    tie_tol = default_tie_tol(A) if tie_tol is None else tie_tol

    def gap(x):
        v = branch_values(b, A, lam, x, 2)
        return v[1] - v[0]

    x = b.nodes
    g = gap(x)
    sgn = np.where(np.abs(g) <= tie_tol, 0, np.sign(g)).astype(int)
    if np.all(sgn == 0):
        return TurningPoints((), degenerate=True)
    points = []
    nz = np.flatnonzero(sgn)
    for k in range(nz.size - 1):
        i, j = nz[k], nz[k + 1]
        if sgn[i] != sgn[j]:
            lo, hi = x[i], x[j]
            glo = g[i]
            while hi - lo > xtol:
                mid = 0.5 * (lo + hi)
                gm = gap(mid)
                if gm == 0.0:
                    lo = hi = mid
                    break
                if np.sign(gm) == np.sign(glo):
                    lo, glo = mid, gm
                else:
                    hi = mid
            points.append(0.5 * (lo + hi))
        elif j > i + 1:
            points.append(0.5 * (x[i + 1] + x[j - 1]))
    return TurningPoints(tuple(float(p) for p in points))


def detect_recurrence(points, tol: float = RECURRENCE_TOL, window: int = RECURRENCE_WINDOW):
    """First ``(k, m)`` with ``|points[m] - points[k]| <= tol`` and ``0 < m - k <= window``."""
    pts = np.asarray(points, dtype=float)
    for m in range(1, pts.size):
        lo = max(0, m - window)
        dist = np.abs(pts[lo:m] - pts[m])
        hits = np.flatnonzero(dist <= tol)
        if hits.size:
            return int(lo + hits[-1]), m
    return None


@dataclass(frozen=True)
class Realization:
    """Greedy backward itinerary of ``x0``; ``seq`` is set when the orbit recurs."""

    digits: tuple[int, ...]
    ties: tuple[bool, ...]
    points: tuple[float, ...]
    seq: SymbolSeq | None = None

    @property
    def all_tied(self) -> bool:
        return bool(self.ties) and all(self.ties)


def realizer(
    b: GridFunction,
    A: Potential,
    lam: float,
    x0: float,
    depth: int = 200,
    tie_tol: float | None = None,
    d: int = 2,
    stop_on_cycle: bool = True,
) -> Realization:
    """Follow the maximising inverse branch from ``x0`` for up to ``depth`` steps.

    Ties (within ``tie_tol`` of the max) are flagged and resolved towards the
    largest digit. When the visited points recur within ``RECURRENCE_TOL`` the
    itinerary is closed into an eventually periodic ``SymbolSeq``.
    """
    tie_tol = default_tie_tol(A) if tie_tol is None else tie_tol
    y = float(x0)
    digits: list[int] = []
    ties: list[bool] = []
    points = [y]
    seq = None
    for _ in range(depth):
        vals = branch_values(b, A, lam, y, d)
        best = vals.max()
        near = np.flatnonzero(vals >= best - tie_tol)
        i = int(near[-1])
        digits.append(i)
        ties.append(bool(near.size > 1))
        y = (y + i) / d
        points.append(y)
        m = len(points) - 1
        lo = max(0, m - RECURRENCE_WINDOW)
        dist = np.abs(np.asarray(points[lo:m]) - y)
        hits = np.flatnonzero(dist <= RECURRENCE_TOL)
        if hits.size and seq is None:
            k = lo + int(hits[-1])
            seq = SymbolSeq(digits[:k], digits[k:m], d)
            if stop_on_cycle:
                break
    return Realization(tuple(digits), tuple(ties), tuple(points), seq)


@dataclass(frozen=True)
class EmpiricalMeasure:
    bins: np.ndarray  # left edges
    weights: np.ndarray
    orbit_points: tuple[float, ...] = ()
    period: int | None = None
    degenerate: bool = False

    def support(self, mass: float = 1e-12) -> np.ndarray:
        return self.bins[self.weights > mass]

    def to_dict(self) -> dict:
        return {"orbit": {"points": list(self.orbit_points), "period": self.period}, "degenerate": self.degenerate}


def empirical_measure(
    b: GridFunction,
    A: Potential,
    lam: float,
    x0: float = 0.1,
    n_steps: int = 2000,
    tie_tol: float | None = None,
    d: int = 2,
    nbins: int | None = None,
) -> EmpiricalMeasure:
    """Visit frequencies of the greedy backward orbit of ``x0`` plus the terminal cycle."""
    real = realizer(b, A, lam, x0, n_steps, tie_tol, d, stop_on_cycle=False)
    pts = np.asarray(real.points[1:])
    nbins = nbins or b.n
    idx = np.minimum((pts * nbins).astype(np.int64), nbins - 1)
    weights = np.bincount(idx, minlength=nbins) / pts.size
    orbit: tuple[float, ...] = ()
    period = None
    tail = pts[-4 * RECURRENCE_WINDOW :]
    hit = detect_recurrence(tail)
    if hit is not None:
        k, m = hit
        period = m - k
        # the last full cycle, sorted for reporting
        orbit = tuple(sorted(float(p) for p in tail[-period:]))
    degenerate = real.all_tied
    return EmpiricalMeasure(np.arange(nbins) / nbins, weights, orbit, period, degenerate)


@dataclass(frozen=True)
class SweepRow:
    lam: float
    max_b: float
    scaled: float
    iterations: int


def lambda_sweep(A: Potential, lams, n: int = DEFAULT_GRID, tol: float = DEFAULT_TOL, d: int = 2) -> list[SweepRow]:
    """``(lam, max b_lam, (1 - lam) max b_lam)`` for each discount; the last column tends to m(A)."""
    rows = []
    for lam in lams:
        _check_lambda(lam)
        if lam > 0.95:
            warnings.warn(f"lambda={lam}: contraction factor close to 1, expect ~{int(25 / (1 - lam))} iterations",
                          RuntimeWarning, stacklevel=2)
        rep = solve_subaction(A, lam, d, n, tol)
        mb = rep.b.max()
        rows.append(SweepRow(lam, mb, (1.0 - lam) * mb, rep.iterations))
    return rows
