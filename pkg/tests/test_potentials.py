import numpy as np
import pytest

from fatattractor.potentials import (
    PotentialSpecError,
    builtin,
    cosine,
    deriv_sup_norm,
    parse_potential,
    polynomial,
    quad_drift,
    quad_eps,
    quad_sym,
    sine,
    tent,
)


def test_builtin_values():
    assert builtin("poly", -0.25, 1, -1)(0.5) == 0.0
    assert tent()(0.5) == 0.0
    assert tent()(0.0) == -3.0
    assert cosine()(0.0) == -1.0
    assert sine()(0.25) == pytest.approx(1.0)


def test_polynomials_evaluated_literally_at_one():
    # -(x - 1/2)^2 is continuous on the circle, but x itself is not
    assert polynomial([0, 1])(1.0) == 1.0
    assert polynomial([0, 1])(1.25) == 0.25
    assert quad_sym()(-0.25) == quad_sym()(0.75)


def test_quad_drift_expansion():
    xs = np.linspace(0, 1, 11)
    assert np.allclose(quad_drift()(xs), -(1.010 * xs - 0.455) ** 2, atol=1e-15)


def test_quad_eps_bump_vanishes_at_ends():
    A = quad_eps(0.05, 0.2)
    assert A(0.0) == pytest.approx(-0.25 - 0.2, abs=1e-15)
    assert A(1.0) == pytest.approx(-0.25 - 0.2, abs=1e-14)
    xs = np.linspace(0, 1, 101)
    bump = (xs - xs**2) * (1 + 3 * xs + 4.5 * xs**2 + 4.5 * xs**3 + 27 / 8 * xs**4 + 81 / 40 * xs**5)
    assert np.allclose(A(xs), -(xs - 0.5) ** 2 + 0.05 * bump - 0.2, atol=1e-14)


def test_deriv_sup_norm():
    assert deriv_sup_norm(quad_sym(), 64) == pytest.approx(1.0)
    assert deriv_sup_norm(tent()) == 6.0
    assert deriv_sup_norm(polynomial([3.0])) == 0.0


def test_symmetry_flags():
    xs = np.linspace(0, 1, 10001)
    assert np.max(np.abs(quad_sym()(xs) - quad_sym()(1 - xs))) <= 1e-15
    assert quad_sym().symmetric and tent().symmetric and cosine().symmetric
    assert not sine().symmetric and not quad_drift().symmetric


def test_twist_flags():
    assert quad_sym().twist is True
    assert polynomial([0, 0, 1]).twist is False
    assert polynomial([0, 1]).twist is False
    assert tent().twist is False
    assert quad_eps().twist is None


@pytest.mark.parametrize("A", [quad_sym(), cosine(), sine(), quad_eps(), quad_drift()], ids=lambda A: A.name)
def test_analytic_derivative_matches_differences(A):
    xs = np.linspace(0.01, 0.99, 97)
    h = 1e-6
    fd = (A(xs + h) - A(xs - h)) / (2 * h)
    assert np.max(np.abs(A.d1(xs) - fd)) <= 1e-6


def test_tent_left_derivative_at_kinks():
    assert tent().d1(0.5) == 6.0
    assert tent().d1(0.0) == -6.0
    assert tent().d1(0.75) == -6.0


def test_grammar():
    assert parse_potential("quad_sym")(0.5) == 0.0
    assert parse_potential("poly:0,1,-1")(0.5) == 0.25
    assert parse_potential("quad_eps:0.05,0.2").name == "quad_eps:0.05,0.2"
    assert parse_potential("quad_drift").name == "quad_drift"
    for bad in ["nope", "poly", "poly:a,b", "quad_eps:1,2,3,4", "table:"]:
        with pytest.raises(PotentialSpecError):
            parse_potential(bad)


def test_table_potential(tmp_path):
    path = tmp_path / "A.csv"
    xs = np.linspace(0, 1, 65)[:-1]
    path.write_text("x,value\n" + "".join(f"{x:.17g},{-((x - 0.5) ** 2):.17g}\n" for x in xs))
    A = parse_potential(f"table:{path}")
    assert A(0.5) == pytest.approx(0.0)
    assert A(0.25) == pytest.approx(-1 / 16)
    # periodic interpolation across 1 -> 0
    assert A(0.999) == pytest.approx(-0.25, abs=1e-2)
    assert A.symmetric
    bad = tmp_path / "bad.csv"
    bad.write_text("0,1\n0.5,x\n")
    with pytest.raises(PotentialSpecError):
        parse_potential(f"table:{bad}")
