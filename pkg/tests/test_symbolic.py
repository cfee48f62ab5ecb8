from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fatattractor.series import candidates
from fatattractor.symbolic import (
    SymbolSeq,
    branch_compose,
    concat,
    cycle_point,
    cycle_points,
    first_difference,
    lex_compare,
    psi,
    shift,
    z_value,
)

from .conftest import seq

words = st.lists(st.integers(0, 1), max_size=4)
periods = st.lists(st.integers(0, 1), min_size=1, max_size=4)
seqs = st.builds(lambda p, q: SymbolSeq(p, q), words, periods)


def expand(a: SymbolSeq, n: int):
    return [a[k] for k in range(n)]


def test_parse_and_print_round_trip():
    for text in ["|10", "0|01", "1|10", "|0", "0|101"]:
        assert str(seq(text)) == text
    # non-canonical input prints in canonical form
    assert str(seq("01|011")) == "0|101"


def test_parse_rejects_garbage():
    with pytest.raises(ValueError):
        SymbolSeq.parse("10")
    with pytest.raises(ValueError):
        SymbolSeq.parse("|12")
    with pytest.raises(ValueError):
        SymbolSeq([], [])


def test_canonical_forms():
    assert SymbolSeq([1, 0], [1, 0]) == seq("|10")
    assert SymbolSeq([], [1, 0, 1, 0]) == seq("|10")
    # 0 followed by (10)^inf is the word 0101... = (01)^inf
    assert SymbolSeq([0], [1, 0]) == seq("|01")
    assert SymbolSeq([0], [0, 1]) == seq("0|01")
    assert hash(SymbolSeq([1], [0, 1])) == hash(seq("|10"))


def test_lex_compare_examples():
    assert lex_compare(seq("|0"), seq("|1")) == -1
    assert lex_compare(SymbolSeq([1, 0], [1, 0]), seq("|10")) == 0
    assert lex_compare(seq("|10"), seq("|1")) == -1
    assert seq("|10") > seq("|01")


def test_lex_compare_alphabet_mismatch():
    with pytest.raises(ValueError):
        lex_compare(seq("|10"), SymbolSeq([], [1, 0], d=3))


def test_shift_examples():
    assert shift(seq("|10")) == seq("|01")
    assert shift(seq("0|01")) == seq("|01")
    assert shift(seq("|1")) == seq("|1")


def test_concat_examples():
    assert concat(1, seq("|01")) == seq("|10")
    assert concat(0, seq("|10")) == seq("|01")
    assert concat(0, seq("|01")) == seq("0|01")
    assert concat(0, seq("|0")) == seq("|0")
    with pytest.raises(ValueError):
        concat(2, seq("|0"))


def test_branch_compose_examples():
    assert branch_compose(0, seq("|1"), 0.0) == 0.5
    assert branch_compose(2, seq("|10"), 0.0) == 5 / 8
    assert branch_compose(1, seq("|0"), 1.0) == 0.25
    # d = 3 by plain iteration
    assert branch_compose(1, SymbolSeq([], [2, 1], 3), 0.0) == pytest.approx((2 / 3 + 1) / 3)


def test_psi_examples():
    assert psi(0, seq("|10")) == 0.5
    assert psi(1, seq("|10")) == 0.25
    assert psi(2, seq("|10")) == 5 / 8
    with pytest.raises(NotImplementedError):
        psi(0, SymbolSeq([], [1], 3))


@pytest.mark.parametrize("lam", [0.3, 0.51, 0.9])
def test_z_value_examples(lam):
    assert z_value(seq("|0"), lam) == 0.0
    assert z_value(seq("|1"), lam) == pytest.approx(2 / (2 - lam), abs=1e-14)
    assert z_value(seq("|10"), lam) == pytest.approx(4 / (4 - lam**2), abs=1e-14)
    with pytest.raises(ValueError):
        z_value(seq("|1"), 1.0)


def test_z_value_against_long_partial_sum():
    lam = 0.7
    for a in candidates(2, 3, 2):
        direct = sum((lam / 2) ** k * a[k] for k in range(200))
        assert z_value(a, lam) == pytest.approx(direct, abs=1e-14)


def test_cycle_points_are_exact_fractions():
    # the (10) cycle is {1/3, 2/3}; (110) passes through 3/7, 5/7, 6/7
    assert cycle_point(seq("|10")) == pytest.approx(1 / 3)
    assert cycle_point(seq("|01")) == pytest.approx(2 / 3)
    pts = sorted(Fraction(p).limit_denominator(100) for p in cycle_points(seq("|110")))
    assert pts == [Fraction(3, 7), Fraction(5, 7), Fraction(6, 7)]


def test_first_difference_beyond_preperiod():
    assert first_difference(seq("|10"), seq("|10")) is None
    assert first_difference(seq("10|0"), seq("|10")) == 2
    assert first_difference(seq("|100"), seq("|10")) == 2


def test_lex_order_is_total_and_consistent():
    fam = candidates(2, 3, 2)
    for a, b in product(fam, repeat=2):
        ea, eb = expand(a, 24), expand(b, 24)
        want = (ea > eb) - (ea < eb)
        assert lex_compare(a, b) == want
        assert (a == b) == (want == 0)


@given(seqs)
def test_canonicalization_idempotent(a):
    again = SymbolSeq(a.preperiod, a.period)
    assert again == a and again.preperiod == a.preperiod and again.period == a.period


@given(seqs)
def test_canonical_form_denotes_same_word(a):
    # a[k] reads the canonical form; rebuild from a long prefix and compare
    raw = expand(a, 30)
    assert SymbolSeq(raw[:10], raw[10:10 + 2 * len(a.period)]) == a


@given(seqs, st.integers(0, 1))
def test_shift_undoes_concat(a, i):
    assert shift(concat(i, a)) == a


@given(seqs, st.integers(0, 40), st.floats(0.0, 1.0))
def test_branch_compose_closed_form(a, k, x):
    assert branch_compose(k, a, x) == pytest.approx(x / 2 ** (k + 1) + psi(k, a), abs=1e-14)


@given(seqs, seqs, st.sampled_from([0.2, 0.51, 0.8, 0.95]))
def test_z_strictly_increasing_with_gap(a, b, lam):
    n = first_difference(a, b)
    if n is None:
        return
    lo, hi = (a, b) if a < b else (b, a)
    gap = (lam / 2) ** n * (1 - lam) / (1 - lam / 2)
    assert z_value(hi, lam) - z_value(lo, lam) >= gap * (1 - 1e-12)
