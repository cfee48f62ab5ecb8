import math

import numpy as np
import pytest

from fatattractor.attractor import (
    AttractorCloud,
    check_orbit,
    compare_boundary,
    digit,
    digit_stream,
    fiber_order,
    float_digits,
    iterate_F,
    orbit_from_digits,
    sqrt2_digits,
    upper_boundary,
)
from fatattractor.potentials import polynomial, quad_sym, sine

from .conftest import LAM


def test_digit():
    assert digit(0.3) == 0 and digit(0.75) == 1 and digit(0.5) == 1
    assert digit(0.5, 3) == 1
    with pytest.raises(ValueError):
        digit(1.0)


def test_sqrt2_digits_exact():
    bits = sqrt2_digits(60)
    val = sum(int(b) * 2.0 ** -(k + 1) for k, b in enumerate(bits))
    assert val == pytest.approx(math.sqrt(2) - 1, abs=1e-15)
    ter = sqrt2_digits(30, 3)
    assert sum(int(b) * 3.0 ** -(k + 1) for k, b in enumerate(ter)) == pytest.approx(math.sqrt(2) - 1, abs=1e-14)


def test_float_digits_and_padding():
    out = float_digits(0.375, 10, rng=np.random.default_rng(0))
    assert out[:3].tolist() == [0, 1, 1]
    # padding keeps the orbit away from 0
    assert float_digits(0.5, 200).sum() > 50
    with pytest.raises(ValueError):
        float_digits(1.5, 4)


def test_orbit_is_doubling():
    x = orbit_from_digits(digit_stream(3000), 3000)
    assert np.max(np.abs((2 * x[:-1]) % 1.0 - x[1:])) <= 1e-15
    assert x.min() >= 0 and x.max() < 1
    # the orbit does not collapse to 0 and visits the whole circle
    assert np.histogram(x, bins=10, range=(0, 1))[0].min() > 200


def test_digit_stream_options():
    a = digit_stream(100, seed=3)
    assert np.array_equal(a, digit_stream(100, seed=3))
    assert not np.array_equal(a, digit_stream(100, seed=4))
    with pytest.raises(ValueError):
        orbit_from_digits(np.zeros(5, dtype=np.int64), 100)


def test_zero_potential_collapses():
    cloud = iterate_F(polynomial([0.0]), LAM, s0=1.0, n=200)
    assert np.allclose(cloud.s, LAM ** np.arange(200))
    assert abs(cloud.s[-1]) <= 1e-50
    bd = upper_boundary(iterate_F(polynomial([0.0]), LAM, s0=1.0, n=4000, burn=2000), bins=10)
    assert np.nanmax(np.abs(bd.smax)) <= 1e-300


def test_constant_potential_fixed_point():
    cloud = iterate_F(polynomial([1.0]), 0.5, s0=-7.0, n=200, burn=100)
    assert np.allclose(cloud.s, 2.0, atol=1e-12)


def test_cloud_is_an_orbit():
    A = quad_sym()
    cloud = iterate_F(A, LAM, n=4000, burn=50)
    assert isinstance(cloud, AttractorCloud) and len(cloud) == 3950
    assert check_orbit(cloud, A) <= 1e-12
    assert cloud.points.shape == (3950, 2)


def test_argument_checks():
    with pytest.raises(ValueError):
        iterate_F(quad_sym(), 1.0)
    with pytest.raises(ValueError):
        iterate_F(quad_sym(), LAM, n=10, burn=10)
    with pytest.raises(ValueError):
        upper_boundary(iterate_F(quad_sym(), LAM, n=10), bins=1)


def test_boundary_bounded_by_b(qsym, b_qsym):
    for seed in (None, 0, 1):
        cloud = iterate_F(qsym, LAM, n=4000, burn=50, seed=seed)
        chk = compare_boundary(upper_boundary(cloud, 20), b_qsym)
        assert chk.ok(5e-3) and chk.visited == 20


def test_empty_bins_flagged():
    cloud = AttractorCloud(np.array([0.1, 0.12]), np.array([1.0, 2.0]), 0)
    bd = upper_boundary(cloud, bins=4)
    assert bd.empty.tolist() == [False, True, True, True]
    assert bd.smax[0] == 2.0 and bd.x_at_max[0] == 0.12
    assert list(bd.rows())[0] == (0.125, 2.0, 2)


def test_fiber_order():
    ok, merged = fiber_order(quad_sym(), LAM, -0.5, 0.5)
    assert ok and merged is not None
    ok, _ = fiber_order(sine(), 0.9, -3.0, 3.0, seed=2)
    assert ok
    with pytest.raises(ValueError):
        fiber_order(quad_sym(), LAM, 1.0, 0.0)


def test_sine_cloud_exports():
    cloud = iterate_F(sine(), LAM, n=2000, burn=50)
    bd = upper_boundary(cloud, 20)
    assert np.all(np.isfinite(bd.smax)) and bd.count.sum() == 1950
