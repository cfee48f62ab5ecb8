"""Numba vs pure-numpy kernels: value iteration and the fibre recursion.

    python3 benchmarks/bench_kernels.py [--grid 4096] [--repeat 5]

Both variants are imported directly from ``fatattractor._kernels`` so the
environment flag does not matter here. The first numba call (compilation) is
timed separately.
"""

import argparse
import time

import numpy as np

from fatattractor import _kernels as K
from fatattractor.potentials import quad_sym
from fatattractor.solver import BellmanOperator


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=4096)
    ap.add_argument("--lam", type=float, default=0.9)
    ap.add_argument("--steps", type=int, default=1_000_000, help="length of the fibre recursion")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not K.HAVE_NUMBA:
        raise SystemExit("numba is not importable; nothing to compare")

    op = BellmanOperator(quad_sym(), args.lam, 2, args.grid)
    stop = 1e-10 * (1 - args.lam) / args.lam
    v0 = np.zeros(op.n)

    def vi(kernel):
        return lambda: kernel(v0, op.pot, op.lo, op.hi, op.w, args.lam, stop, 10**6)

    t = time.perf_counter()
    vi(K.value_iteration_numba)()
    compile_vi = time.perf_counter() - t
    t_np, (v_np, it_np, _) = best_of(vi(K.value_iteration_numpy), args.repeat)
    t_nb, (v_nb, it_nb, _) = best_of(vi(K.value_iteration_numba), args.repeat)

    forcing = np.random.default_rng(0).standard_normal(args.steps)
    t = time.perf_counter()
    K.affine_scan_numba(forcing[:10], args.lam, 0.0)
    compile_scan = time.perf_counter() - t
    t_snp, s_np = best_of(lambda: K.affine_scan_numpy(forcing, args.lam, 0.0), args.repeat)
    t_snb, s_nb = best_of(lambda: K.affine_scan_numba(forcing, args.lam, 0.0), args.repeat)

    print(f"value iteration, n={args.grid}, lambda={args.lam}: {it_nb} sweeps")
    print(f"  numpy  {t_np * 1e3:9.2f} ms")
    print(f"  numba  {t_nb * 1e3:9.2f} ms   (compile {compile_vi * 1e3:.0f} ms)  speedup {t_np / t_nb:5.1f}x")
    print(f"  max |difference| {np.max(np.abs(v_np - v_nb)):.2e}, sweeps {it_np} vs {it_nb}")
    print(f"affine scan, {args.steps} steps")
    print(f"  numpy  {t_snp * 1e3:9.2f} ms (scipy lfilter)")
    print(f"  numba  {t_snb * 1e3:9.2f} ms   (compile {compile_scan * 1e3:.0f} ms)  speedup {t_snp / t_snb:5.1f}x")
    print(f"  max |difference| {np.max(np.abs(s_np - s_nb)):.2e}")


if __name__ == "__main__":
    main()
