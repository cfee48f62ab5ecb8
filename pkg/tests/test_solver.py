import warnings

import numpy as np
import pytest

from fatattractor.potentials import Potential, polynomial, quad_sym
from fatattractor.series import s_value
from fatattractor.solver import (
    BellmanOperator,
    GridFunction,
    SolverError,
    bellman_apply,
    branch_values,
    calibration_residual,
    coboundary_shift_check,
    detect_recurrence,
    empirical_measure,
    gap_function,
    lambda_sweep,
    rate_at,
    rate_function,
    realizer,
    solve_subaction,
    turning_points,
)

from .conftest import LAM, seq


def const_grid(c, n=64):
    return GridFunction(np.full(n, float(c)))


def test_grid_function_interpolates_and_wraps():
    g = GridFunction(np.array([0.0, 1.0, 2.0, 3.0]))
    assert g(0.125) == 0.5
    assert g(0.875) == 1.5  # between 3 at 3/4 and 0 at 1
    assert g(1.25) == g(0.25)
    with pytest.raises(ValueError):
        g.values[0] = 1.0


def test_bellman_examples():
    one = polynomial([1.0])
    zero = polynomial([0.0])
    assert np.allclose(bellman_apply(const_grid(0), one, LAM).values, 1.0)
    assert np.allclose(bellman_apply(const_grid(3), zero, LAM).values, LAM * 3)
    assert np.allclose(bellman_apply(const_grid(2), one, 0.5).values, 2.0)


def test_solve_constant():
    rep = solve_subaction(polynomial([1.0]), 0.5, n=64)
    assert np.max(np.abs(rep.b.values - 2.0)) <= 1e-10
    assert rep.final_residual <= 1e-10


def test_solve_quad_sym_values(b_qsym, qsym):
    assert b_qsym(1 / 3) == pytest.approx(-1 / (36 * (1 - LAM)), abs=1e-3)
    assert b_qsym(0.0) == pytest.approx(-0.044259, abs=1e-3)
    # the grid agrees with the series oracle much more tightly than asked
    assert abs(b_qsym(0.0) - s_value(qsym, LAM, 0.0, seq("|10")).value) <= 1e-8


def test_iteration_cap():
    with pytest.raises(SolverError) as exc:
        solve_subaction(quad_sym(), 0.9, n=64, max_iter=3)
    assert exc.value.iterations == 3 and exc.value.residual > 0


def test_calibration_residual(b_qsym, qsym):
    assert calibration_residual(b_qsym, qsym, LAM) <= 1e-10


def test_coboundary_shift():
    assert coboundary_shift_check(quad_sym(), const_grid(0, 1024), LAM) <= 1e-8
    assert coboundary_shift_check(quad_sym(), const_grid(0.3, 1024), LAM) <= 1e-8
    xs = np.arange(1024) / 1024
    assert coboundary_shift_check(quad_sym(), GridFunction(np.sin(2 * np.pi * xs)), LAM) <= 1e-3


def test_rate_function(b_qsym, qsym, b_const, const):
    assert np.max(np.abs(rate_function(b_const, const, LAM).values)) <= 1e-9
    R = rate_function(b_qsym, qsym, LAM)
    assert R.values.min() >= -(1e-10 + 1.0 / 4096 / (1 - LAM))
    assert rate_at(b_qsym, qsym, LAM, 1 / 3) <= 1e-3
    assert rate_at(b_qsym, qsym, LAM, 0.0) > 0.1


def test_gap_function(b_qsym, qsym, b_const, const):
    assert abs(gap_function(b_qsym, qsym, LAM)(0.5)) <= 1e-9
    assert np.max(np.abs(gap_function(b_const, const, LAM).values)) <= 1e-12
    assert branch_values(b_qsym, qsym, LAM, np.array([0.2, 0.4])).shape == (2, 2)


def test_turning_points(b_qsym, qsym, b_const, const, b_aaa, aaa):
    tp = turning_points(b_qsym, qsym, LAM)
    assert tp.count == 1 and tp.points[0] == pytest.approx(0.5, abs=1e-8)
    assert turning_points(b_const, const, LAM).degenerate
    # the perturbed example has a single branch tie, near 0.607
    tp = turning_points(b_aaa, aaa, LAM)
    assert tp.count == 1 and tp.points[0] == pytest.approx(0.607, abs=2e-3)


def test_realizer(b_qsym, qsym, b_const, const):
    r = realizer(b_qsym, qsym, LAM, 1 / 3)
    assert r.seq == seq("|10") and len(r.seq.period) == 2
    assert realizer(b_const, const, LAM, 0.4, depth=20).all_tied
    r = realizer(b_qsym, qsym, LAM, 0.1)
    assert r.seq is not None and len(r.seq.period) == 2
    assert b_qsym(0.1) == pytest.approx(s_value(qsym, LAM, 0.1, r.seq).value, abs=1e-8)


def test_detect_recurrence():
    assert detect_recurrence([0.1, 0.2, 0.3, 0.2]) == (1, 3)
    assert detect_recurrence([0.1, 0.2, 0.3]) is None


def test_empirical_measure(b_qsym, qsym, b_const, const):
    em = empirical_measure(b_qsym, qsym, LAM)
    assert em.period == 2
    assert np.allclose(em.orbit_points, [1 / 3, 2 / 3], atol=1e-9)
    # almost all mass sits in the two bins holding 1/3 and 2/3
    top = np.sort(em.weights)[-2:]
    assert top.sum() >= 0.95
    assert empirical_measure(b_const, const, LAM, n_steps=100).degenerate


def test_empirical_measure_sawtooth():
    A = polynomial([0.0, 1.0])
    b = solve_subaction(A, LAM, n=1024).b
    em = empirical_measure(b, A, LAM, n_steps=200)
    # descent along tau_1 heads to its fixed point x = 1
    assert em.orbit_points[-1] > 0.999
    assert rate_at(b, A, LAM, em.orbit_points[-1]) <= 1e-2


def test_lambda_sweep():
    rows = lambda_sweep(polynomial([1.0]), [0.3, 0.6], n=64)
    assert all(r.scaled == pytest.approx(1.0, abs=1e-9) for r in rows)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        rows = lambda_sweep(quad_sym(), [0.5, 0.9, 0.99], n=2048)
    assert any(issubclass(w.category, RuntimeWarning) for w in caught)
    dist = [abs(r.scaled + 1 / 36) for r in rows]
    assert dist[0] > dist[1] > dist[2]
    with pytest.raises(ValueError):
        lambda_sweep(quad_sym(), [1.0])


def test_operator_precomputation_reused(qsym):
    op = BellmanOperator(qsym, LAM, 2, 512)
    a = solve_subaction(qsym, LAM, n=512, op=op).b
    b = solve_subaction(qsym, LAM, n=512).b
    assert a.sup_dist(b) == 0.0


def test_general_degree():
    A = Potential("cos3", lambda x: np.cos(2 * np.pi * x))
    rep = solve_subaction(A, 0.6, d=3, n=729)
    assert calibration_residual(rep.b, A, 0.6, d=3) <= 1e-10
