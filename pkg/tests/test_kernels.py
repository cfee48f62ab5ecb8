import importlib.util
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from fatattractor import _kernels as K
from fatattractor.potentials import cosine, quad_sym
from fatattractor.solver import BellmanOperator

needs_numba = pytest.mark.skipif(not K.HAVE_NUMBA, reason="numba disabled or missing")


def operator(n=256, lam=0.7):
    return BellmanOperator(quad_sym(), lam, 2, n)


def test_numpy_step_matches_brute_force():
    op = operator(64)
    v = np.random.default_rng(3).standard_normal(op.n)
    out, arg = K.bellman_step_numpy(v, op.pot, op.lo, op.hi, op.w, op.lam)
    for j in range(op.n):
        cand = [op.pot[i, j] + op.lam * ((1 - op.w[i, j]) * v[op.lo[i, j]] + op.w[i, j] * v[op.hi[i, j]]) for i in range(2)]
        assert out[j] == pytest.approx(max(cand), abs=1e-15)
        assert cand[arg[j]] == max(cand)


def test_step_ties_go_to_larger_index():
    pot = np.zeros((2, 3))
    lo = np.zeros((2, 3), dtype=np.int64)
    w = np.zeros((2, 3))
    _, arg = K.bellman_step_numpy(np.zeros(3), pot, lo, lo, w, 0.5)
    assert np.all(arg == 1)


@needs_numba
def test_numba_and_numpy_agree():
    op = operator(512)
    v = np.random.default_rng(0).standard_normal(op.n)
    a, ia = K.bellman_step_numpy(v, op.pot, op.lo, op.hi, op.w, op.lam)
    b, ib = K.bellman_step_numba(v, op.pot, op.lo, op.hi, op.w, op.lam)
    assert np.array_equal(a, b) and np.array_equal(ia, ib)
    va, na, da = K.value_iteration_numpy(np.zeros(op.n), op.pot, op.lo, op.hi, op.w, op.lam, 1e-12, 10**5)
    vb, nb, db = K.value_iteration_numba(np.zeros(op.n), op.pot, op.lo, op.hi, op.w, op.lam, 1e-12, 10**5)
    assert na == nb and np.max(np.abs(va - vb)) <= 1e-14
    f = cosine()(np.random.default_rng(1).random(10_000))
    assert np.max(np.abs(K.affine_scan_numpy(f, 0.9, 0.3) - K.affine_scan_numba(f, 0.9, 0.3))) <= 1e-12


def test_affine_scan_against_loop():
    f = np.array([1.0, -2.0, 0.5])
    s = [0.25]
    for x in f:
        s.append(0.5 * s[-1] + x)
    assert np.allclose(K.affine_scan_numpy(f, 0.5, 0.25), s)
    assert K.affine_scan_numpy(np.array([]), 0.5, 1.0).tolist() == [1.0]


def test_value_iteration_stops_at_cap():
    op = operator(64, lam=0.99)
    _, it, diff = K.value_iteration_numpy(np.zeros(op.n), op.pot, op.lo, op.hi, op.w, op.lam, 0.0, 5)
    assert it == 5 and diff > 0


@pytest.mark.parametrize("flag,expect", [("1", False), ("", None)])
def test_environment_flag(flag, expect):
    code = (
        "import json, numpy as np; from fatattractor import _kernels as K;"
        "from fatattractor.potentials import quad_sym; from fatattractor.solver import solve_subaction;"
        "b = solve_subaction(quad_sym(), 0.51, n=256).b;"
        "print(json.dumps({'use': K.USE_NUMBA, 'name': K.value_iteration.__name__, 'b0': float(b(0.0))}))"
    )
    env = dict(os.environ, FATATTRACTOR_NO_NUMBA=flag)
    out = json.loads(subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True).stdout)
    if expect is False:
        assert out["use"] is False and out["name"] == "value_iteration_numpy"
    else:
        assert out["use"] == (importlib.util.find_spec("numba") is not None)
    assert out["b0"] == pytest.approx(-0.044259, abs=1e-3)
