"""Closed forms for ``d = 2`` and ``A(x) = c0 + c1 x + c2 x^2``.

The series of a quadratic potential is itself quadratic in ``x``:

    dS/dx(x, a) = c1 / (2 - lam) + 2 c2 x / (4 - lam) + 2 c2 Z(a) / (4 - lam)

with ``Z(a) = sum_k (lam/2)^k a_k``. Additive constants ``S(0, a)`` are taken
from the series evaluator, never from hand-derived formulas.
"""

from __future__ import annotations

from dataclasses import dataclass

from .potentials import Potential, polynomial
from .series import DEFAULT_TOL, TEN, ZERO_ONE, crossing_point, s_value
from .symbolic import SymbolSeq, branch_compose, z_value


@dataclass(frozen=True)
class QuadraticSpec:
    c0: float
    c1: float
    c2: float
    lam: float

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValueError(f"lambda must lie in (0, 1), got {self.lam}")

    @classmethod
    def from_potential(cls, A: Potential, lam: float) -> "QuadraticSpec":
        c = A.coeffs
        if c is None or len(c) > 3:
            raise ValueError(f"{A.name} is not a polynomial of degree <= 2")
        c = tuple(c) + (0.0,) * (3 - len(c))
        return cls(c[0], c[1], c[2], lam)

    def potential(self) -> Potential:
        return polynomial([self.c0, self.c1, self.c2])


def _binary(*seqs: SymbolSeq) -> None:
    if any(s.d != 2 for s in seqs):
        raise ValueError("closed forms need the binary alphabet")


def closed_s_deriv(q: QuadraticSpec, x, a: SymbolSeq):
    _binary(a)
    lam = q.lam
    return q.c1 / (2.0 - lam) + 2.0 * q.c2 * x / (4.0 - lam) + 2.0 * q.c2 * z_value(a, lam) / (4.0 - lam)


def twist_predicate(q: QuadraticSpec) -> bool:
    return q.c2 < 0.0


@dataclass(frozen=True)
class Crossing:
    x: float
    inside: bool  # root lies in [0, 1]


def closed_crossing(q: QuadraticSpec, a: SymbolSeq, b: SymbolSeq, tol: float = DEFAULT_TOL) -> Crossing:
    """Root of the affine function ``S(., a) - S(., b)``.

    Its slope is ``2 c2 (Z(a) - Z(b)) / (4 - lam)``; the intercept ``Delta(0)``
    comes from the series.
    """
    _binary(a, b)
    lam = q.lam
    slope = 2.0 * q.c2 * (z_value(a, lam) - z_value(b, lam)) / (4.0 - lam)
    if a == b or slope == 0.0:
        raise ValueError(f"S(., {a}) and S(., {b}) are parallel")
    A = q.potential()
    d0 = s_value(A, lam, 0.0, a, tol).value - s_value(A, lam, 0.0, b, tol).value
    x = -d0 / slope
    return Crossing(float(x), bool(0.0 <= x <= 1.0))


def crossing_agreement(q: QuadraticSpec, a: SymbolSeq, b: SymbolSeq) -> float | None:
    """``|closed - bisection|`` when the root is inside [0, 1], else None."""
    c = closed_crossing(q, a, b)
    if not c.inside:
        return None
    # roots may sit on an endpoint up to rounding; the polynomial extends past [0, 1]
    pad = 1e-6
    return abs(c.x - crossing_point(q.potential(), q.lam, a, b, (-pad, 1.0 + pad)))


def printed_b0(lam: float) -> float:
    """Printed closed form ``2 lam / (4 (4 - lam)(2 + lam)(lam - 1))`` for ``b(0)`` of ``-(x - 1/2)^2``."""
    return 2.0 * lam / (4.0 * (4.0 - lam) * (2.0 + lam) * (lam - 1.0))


def closed_b0(lam: float) -> float:
    """``S(0, (10)^inf)`` for ``-(x - 1/2)^2``, summed by hand: ``lam (2 - lam) / (4 (4 - lam)(2 + lam)(lam - 1))``."""
    return lam * (2.0 - lam) / (4.0 * (4.0 - lam) * (2.0 + lam) * (lam - 1.0))


@dataclass(frozen=True)
class SymmetricSubaction:
    """``b(x) = const + lin x + quad x^2`` with (10)^inf on [0, 1/2] and (01)^inf on [1/2, 1]."""

    lam: float
    ten: tuple[float, float, float]
    zero_one: tuple[float, float, float]
    b0_oracle: float
    b0_printed: float
    b_half: float

    @property
    def mismatch(self) -> bool:
        return abs(self.b0_oracle - self.b0_printed) > 1e-6

    def __call__(self, x: float) -> float:
        c = self.ten if x <= 0.5 else self.zero_one
        return c[0] + c[1] * x + c[2] * x * x

    def to_dict(self) -> dict:
        return {
            "lambda": self.lam,
            "b0_oracle": self.b0_oracle,
            "b0_paper_formula": self.b0_printed,
            "b0_mismatch": self.mismatch,
            "b_half": self.b_half,
            "piece_coefficients": {str(TEN): list(self.ten), str(ZERO_ONE): list(self.zero_one)},
            "crossing": 0.5,
        }


def explicit_symmetric_subaction(lam: float, tol: float = DEFAULT_TOL) -> SymmetricSubaction:
    q = QuadraticSpec(-0.25, 1.0, -1.0, lam)
    A = q.potential()
    quad = q.c2 / (4.0 - lam)
    pieces = []
    for seq in (TEN, ZERO_ONE):
        lin = q.c1 / (2.0 - lam) + 2.0 * q.c2 * z_value(seq, lam) / (4.0 - lam)
        pieces.append((s_value(A, lam, 0.0, seq, tol).value, lin, quad))
    b0 = pieces[0][0]
    b_half = pieces[0][0] + 0.5 * pieces[0][1] + 0.25 * quad
    return SymmetricSubaction(lam, pieces[0], pieces[1], b0, printed_b0(lam), b_half)


def preimage_level(m: int) -> float:
    """``(2^(m+2) - 1) / (3 2^(m+1))`` for even m, ``(2^(m+2) + 1) / (3 2^(m+1))`` for odd m."""
    sign = -1 if m % 2 == 0 else 1
    return (2 ** (m + 2) + sign) / (3 * 2 ** (m + 1))


def preimage_level_direct(m: int) -> float:
    """The same point by branch composition: (10)^inf from 0 for even m, (01)^inf from 1 for odd m."""
    if m % 2 == 0:
        return branch_compose(m, TEN, 0.0)
    return branch_compose(m, ZERO_ONE, 1.0)
