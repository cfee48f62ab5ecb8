"""Potentials ``A: S^1 -> R`` and the ``--potential`` text grammar.

Polynomial potentials are evaluated literally on [0, 1] and wrapped mod 1
only outside it, so ``A(1)`` is the left limit even when ``A(0) != A(1)``.
Grid code never needs ``A`` at 1; series code does (e.g. the fixed point of
``tau_1`` is 1).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as P

Func = Callable[[np.ndarray], np.ndarray]

BUILTIN_NAMES = ("poly", "quad_sym", "tent", "cosine", "sine", "quad_eps", "quad_drift", "table")


class PotentialSpecError(ValueError):
    pass


def _wrap(x):
    x = np.asarray(x, dtype=float)
    outside = (x < 0.0) | (x > 1.0)
    if np.any(outside):
        x = np.where(outside, x - np.floor(x), x)
    return x


@dataclass(frozen=True)
class Potential:
    name: str
    func: Func
    deriv1: Func | None = None
    deriv2: Func | None = None
    symmetric: bool = False
    # True/False when the twist property is known, None when undecided
    twist: bool | None = None
    coeffs: tuple[float, ...] | None = None
    kinks: tuple[float, ...] = field(default_factory=tuple)

    def __call__(self, x):
        out = self.func(_wrap(x))
        return float(out) if np.ndim(out) == 0 else out

    def d1(self, x, h: float = 1e-6):
        """First derivative; central differences when no analytic form exists."""
        x = _wrap(x)
        if self.deriv1 is not None:
            out = self.deriv1(x)
        else:
            out = (self.func(x + h) - self.func(x - h)) / (2 * h)
        return float(out) if np.ndim(out) == 0 else out

    def d2(self, x, h: float = 1e-4):
        x = _wrap(x)
        if self.deriv2 is not None:
            out = self.deriv2(x)
        else:
            out = (self.func(x + h) - 2 * self.func(x) + self.func(x - h)) / h**2
        return float(out) if np.ndim(out) == 0 else out

    def sup_norm(self, n: int = 4096) -> float:
        xs = np.linspace(0.0, 1.0, n + 1)
        return float(np.max(np.abs(self.func(xs))))

    @property
    def is_constant(self) -> bool:
        xs = np.linspace(0.0, 1.0, 257)
        v = self.func(xs)
        return bool(np.ptp(v) == 0.0)


def deriv_sup_norm(A: Potential, n: int = 4096) -> float:
    """Max of ``|A'|`` over ``j/n``, j = 0..n; a lower bound for the true sup-norm."""
    xs = np.linspace(0.0, 1.0, n + 1)
    if A.deriv1 is not None:
        vals = A.deriv1(xs)
    else:
        h = 1e-6
        inner = np.clip(xs, h, 1.0 - h)
        vals = (A.func(inner + h) - A.func(inner - h)) / (2 * h)
    return float(np.max(np.abs(np.broadcast_to(vals, xs.shape))))


def _is_symmetric(f: Func) -> bool:
    xs = np.linspace(0.0, 1.0, 1001)
    a, b = f(xs), f(1.0 - xs)
    scale = 1.0 + np.max(np.abs(a))
    return bool(np.max(np.abs(a - b)) <= 1e-13 * scale)


def polynomial(coeffs, name: str | None = None) -> Potential:
    """``A(x) = c0 + c1 x + c2 x^2 + ...`` (ascending coefficients)."""
    c = np.asarray(coeffs, dtype=float)
    if c.ndim != 1 or c.size == 0:
        raise PotentialSpecError("polynomial needs at least one coefficient")
    c = np.trim_zeros(c, "b") if np.any(c) else np.zeros(1)
    c1 = P.polyder(c)
    c2 = P.polyder(c, 2)

    def f(x):
        return P.polyval(x, c) + np.zeros_like(x)

    def f1(x):
        return P.polyval(x, c1) + np.zeros_like(x)

    def f2(x):
        return P.polyval(x, c2) + np.zeros_like(x)

    twist = None
    if c.size <= 3:
        twist = bool(c.size == 3 and c[2] < 0)
    label = name or "poly:" + ",".join(f"{v:g}" for v in coeffs)
    return Potential(label, f, f1, f2, symmetric=_is_symmetric(f), twist=twist, coeffs=tuple(float(v) for v in c))


def quad_sym() -> Potential:
    """``-(x - 1/2)^2``."""
    return polynomial([-0.25, 1.0, -1.0], name="quad_sym")


def tent() -> Potential:
    """``6x - 3`` on [0, 1/2), ``-6x + 3`` on [1/2, 1]; one-sided (left) slopes at kinks."""

    def f(x):
        return np.where(x < 0.5, 6.0 * x - 3.0, -6.0 * x + 3.0)

    def f1(x):
        # left derivative: at 1/2 the rising branch, at 0 the falling branch coming from 1-
        return np.where((x > 0.0) & (x <= 0.5), 6.0, -6.0)

    def f2(x):
        return np.zeros_like(x)

    return Potential("tent", f, f1, f2, symmetric=True, twist=False, kinks=(0.0, 0.5))


def cosine() -> Potential:
    """``-1/2 - 1/2 cos(2 pi x)``."""
    tp = 2 * np.pi

    def f(x):
        return -0.5 - 0.5 * np.cos(tp * x)

    def f1(x):
        return 0.5 * tp * np.sin(tp * x)

    def f2(x):
        return 0.5 * tp**2 * np.cos(tp * x)

    return Potential("cosine", f, f1, f2, symmetric=True)


def sine() -> Potential:
    """``sin(2 pi x)``."""
    tp = 2 * np.pi
    return Potential(
        "sine",
        lambda x: np.sin(tp * x),
        lambda x: tp * np.cos(tp * x),
        lambda x: -(tp**2) * np.sin(tp * x),
    )


# (x - x^2)(1 + 3x + 9/2 x^2 + 9/2 x^3 + 27/8 x^4 + 81/40 x^5), expanded
_BUMP = P.polymul([0.0, 1.0, -1.0], [1.0, 3.0, 4.5, 4.5, 27 / 8, 81 / 40])


def quad_eps(eps: float = 0.05, drift: float = 0.2) -> Potential:
    """``-(x - 1/2)^2 + eps * bump(x) - drift`` with the polynomial bump vanishing at 0 and 1."""
    c = P.polyadd(P.polyadd([-0.25, 1.0, -1.0], eps * _BUMP), [-drift])
    return replace(polynomial(c, name=f"quad_eps:{eps:g},{drift:g}"), twist=None)


def quad_drift(eps: float = 0.005, drift: float = 0.05) -> Potential:
    """``-(x - 1/2 + eps (2x - 1) + drift)^2``; the defaults give ``-(1.010 x - 0.455)^2``."""
    slope = 1.0 + 2.0 * eps
    offset = -0.5 - eps + drift
    c = [-(offset**2), -2.0 * slope * offset, -(slope**2)]
    return polynomial(c, name="quad_drift" if (eps, drift) == (0.005, 0.05) else f"quad_drift:{eps:g},{drift:g}")


def table(path: str | Path) -> Potential:
    """Sampled potential from a two-column CSV ``x,value``; periodic linear interpolation."""
    xs, vs = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                xs.append(float(row[0]))
                vs.append(float(row[1]))
            except (ValueError, IndexError):
                if xs:
                    raise PotentialSpecError(f"malformed row in {path}: {row}") from None
                continue  # header
    if len(xs) < 2:
        raise PotentialSpecError(f"table {path} needs at least two rows")
    order = np.argsort(xs)
    xt = np.asarray(xs, dtype=float)[order]
    vt = np.asarray(vs, dtype=float)[order]
    # periodic extension by one sample on each side
    xt = np.concatenate(([xt[-1] - 1.0], xt, [xt[0] + 1.0]))
    vt = np.concatenate(([vt[-1]], vt, [vt[0]]))

    def f(x):
        return np.interp(x, xt, vt)

    return Potential(f"table:{path}", f, symmetric=_is_symmetric(f))


def builtin(name: str, *params: float) -> Potential:
    try:
        if name == "poly":
            if not params:
                raise PotentialSpecError("poly needs coefficients, e.g. poly:-0.25,1,-1")
            return polynomial(params)
        if name == "quad_sym":
            return quad_sym()
        if name == "tent":
            return tent()
        if name == "cosine":
            return cosine()
        if name == "sine":
            return sine()
        if name == "quad_eps":
            return quad_eps(*params)
        if name == "quad_drift":
            return quad_drift(*params)
    except TypeError as exc:
        raise PotentialSpecError(f"bad parameters for {name}: {exc}") from None
    raise PotentialSpecError(f"unknown potential {name!r}; choose from {', '.join(BUILTIN_NAMES)}")


def parse_potential(spec: str) -> Potential:
    """Parse the ``--potential`` grammar, e.g. ``poly:0,1,-1``, ``quad_eps:0.05,0.2``, ``table:A.csv``."""
    name, _, rest = spec.strip().partition(":")
    if name == "table":
        if not rest:
            raise PotentialSpecError("table needs a path: table:<file.csv>")
        return table(rest)
    params = []
    if rest:
        try:
            params = [float(v) for v in rest.split(",")]
        except ValueError:
            raise PotentialSpecError(f"non-numeric parameter in {spec!r}") from None
    return builtin(name, *params)
