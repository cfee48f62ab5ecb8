"""Eventually periodic itineraries over the alphabet {0, ..., d-1}.

An itinerary ``a = (a_0, a_1, ...)`` selects the inverse branches
``tau_i(y) = (y + i) / d`` of ``T(x) = d x mod 1``; ``a_0`` is applied first.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lcm
from typing import Iterable, Sequence


def _primitive_root(word: tuple[int, ...]) -> tuple[int, ...]:
    n = len(word)
    for p in range(1, n + 1):
        if n % p == 0 and word[:p] * (n // p) == word:
            return word[:p]
    return word


def _canonical(pre: tuple[int, ...], per: tuple[int, ...]):
    per = _primitive_root(per)
    # absorb trailing preperiod digits into the cycle phase
    while pre and pre[-1] == per[-1]:
        per = per[-1:] + per[:-1]
        pre = pre[:-1]
    return pre, per


@dataclass(frozen=True, init=False)
class SymbolSeq:
    """The infinite word ``preperiod + period + period + ...`` in canonical form."""

    preperiod: tuple[int, ...]
    period: tuple[int, ...]
    d: int

    def __init__(self, preperiod: Iterable[int], period: Iterable[int], d: int = 2):
        pre = tuple(int(c) for c in preperiod)
        per = tuple(int(c) for c in period)
        if d < 2:
            raise ValueError(f"alphabet size must be >= 2, got {d}")
        if not per:
            raise ValueError("period must be nonempty")
        if any(c < 0 or c >= d for c in pre + per):
            raise ValueError(f"digits must lie in 0..{d - 1}")
        pre, per = _canonical(pre, per)
        object.__setattr__(self, "preperiod", pre)
        object.__setattr__(self, "period", per)
        object.__setattr__(self, "d", d)

    @classmethod
    def parse(cls, text: str, d: int = 2) -> "SymbolSeq":
        """Parse ``"pre|per"``; e.g. ``"|10"`` is (10)^inf and ``"0|01"`` is 0(01)^inf."""
        if "|" not in text:
            raise ValueError(f"expected 'pre|per', got {text!r}")
        pre, per = text.strip().split("|", 1)
        try:
            return cls([int(c) for c in pre], [int(c) for c in per], d)
        except ValueError as exc:
            raise ValueError(f"bad sequence {text!r}: {exc}") from None

    def __str__(self) -> str:
        return "".join(map(str, self.preperiod)) + "|" + "".join(map(str, self.period))

    def __repr__(self) -> str:
        return f"SymbolSeq({str(self)!r}, d={self.d})"

    def __getitem__(self, k: int) -> int:
        m = len(self.preperiod)
        if k < m:
            return self.preperiod[k]
        return self.period[(k - m) % len(self.period)]

    def prefix(self, n: int) -> tuple[int, ...]:
        return tuple(self[k] for k in range(n))

    @property
    def is_periodic(self) -> bool:
        return not self.preperiod

    def __lt__(self, other: "SymbolSeq") -> bool:
        return lex_compare(self, other) < 0

    def __le__(self, other: "SymbolSeq") -> bool:
        return lex_compare(self, other) <= 0

    def __gt__(self, other: "SymbolSeq") -> bool:
        return lex_compare(self, other) > 0

    def __ge__(self, other: "SymbolSeq") -> bool:
        return lex_compare(self, other) >= 0


def _horizon(a: SymbolSeq, b: SymbolSeq) -> int:
    # two eventually periodic words agree forever once they agree on this many digits
    return max(len(a.preperiod), len(b.preperiod)) + lcm(len(a.period), len(b.period))


def first_difference(a: SymbolSeq, b: SymbolSeq) -> int | None:
    """Index of the first digit where ``a`` and ``b`` differ, or None if equal."""
    if a.d != b.d:
        raise ValueError(f"alphabet mismatch: d={a.d} vs d={b.d}")
    for k in range(_horizon(a, b)):
        if a[k] != b[k]:
            return k
    return None


def lex_compare(a: SymbolSeq, b: SymbolSeq) -> int:
    """Return -1, 0 or 1 as ``a`` is less than, equal to or greater than ``b``."""
    k = first_difference(a, b)
    if k is None:
        return 0
    return -1 if a[k] < b[k] else 1


def shift(a: SymbolSeq) -> SymbolSeq:
    if a.preperiod:
        return SymbolSeq(a.preperiod[1:], a.period, a.d)
    return SymbolSeq((), a.period[1:] + a.period[:1], a.d)


def concat(i: int, a: SymbolSeq) -> SymbolSeq:
    """Prepend digit ``i`` to ``a``."""
    if not 0 <= i < a.d:
        raise ValueError(f"digit {i} out of range for d={a.d}")
    return SymbolSeq((i,) + a.preperiod, a.period, a.d)


def branch_compose(k: int, a: SymbolSeq | Sequence[int], x: float, d: int | None = None) -> float:
    """``(tau_{a_k} o ... o tau_{a_0})(x)`` with ``tau_i(y) = (y + i) / d``; ``d`` defaults to ``a.d`` (or 2)."""
    if d is None:
        d = a.d if isinstance(a, SymbolSeq) else 2
    y = float(x)
    for j in range(k + 1):
        y = (y + a[j]) / d
    return y


def psi(k: int, a: SymbolSeq) -> float:
    """Translation part of the k-fold branch composition (binary alphabet).

    Built from ``psi_0 = a_0 / 2`` and ``2 psi_{k+1} = psi_k + a_{k+1}``; every
    step is exact in binary floating point for k < 52.
    """
    if a.d != 2:
        raise NotImplementedError("psi is only defined for d = 2")
    value = a[0] / 2
    for j in range(1, k + 1):
        value = (value + a[j]) / 2
    return value


def z_value(a: SymbolSeq, lam: float) -> float:
    """Exact ``Z(a) = sum_k (lam/2)^k a_k`` using the periodic tail."""
    if a.d != 2:
        raise NotImplementedError("z_value is only defined for d = 2")
    if not 0.0 < lam < 1.0:
        raise ValueError(f"lambda must lie in (0, 1), got {lam}")
    r = lam / 2
    head = sum(c * r**k for k, c in enumerate(a.preperiod))
    p = len(a.period)
    cycle = sum(c * r**j for j, c in enumerate(a.period))
    return head + r ** len(a.preperiod) * cycle / (1.0 - r**p)


def cycle_point(a: SymbolSeq) -> float:
    """Point ``y`` with ``tau_{k,c}(y) = y`` where ``c`` is the period word of ``a``.

    The backward orbit along ``a`` converges to the cycle through this point
    once the preperiod has been consumed.
    """
    d = a.d
    p = len(a.period)
    num = sum(c * d**j for j, c in enumerate(a.period))
    return num / (d**p - 1)


def cycle_points(a: SymbolSeq) -> list[float]:
    """The p points visited by the periodic branch composition, starting after ``c_0``."""
    y = cycle_point(a)
    out = []
    for c in a.period:
        y = (y + c) / a.d
        out.append(y)
    return out
