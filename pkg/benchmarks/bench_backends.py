"""Compiled vs pure-Python kernels: simplex solves and vol-zonotope steps.

    python3 benchmarks/bench_backends.py [--repeat 200]
"""

import argparse
import time

import numpy as np

from zonodpp import _backend, _core_py
from zonodpp.lp import FEAS_TOL, OPT_TOL, PIVOT_TOL
from zonodpp.models import complete_graph, incidence_feature_matrix


def time_simplex(core, M, c, xs, repeat):
    r, n = M.shape
    lo, hi = np.zeros(n), np.ones(n)
    y, st = np.empty(n), np.empty(n, dtype=np.int8)
    bs, d = np.empty(r, dtype=np.int64), np.empty(n)
    t0 = time.perf_counter()
    for i in range(repeat):
        core.simplex_solve(M, xs[i % len(xs)], c, lo, hi, False, None, None,
                           10 * (n + r), 100000, FEAS_TOL, PIVOT_TOL, OPT_TOL, y, st, bs, d)
    return (time.perf_counter() - t0) / repeat


def time_logdet(core, M, repeat):
    rng = np.random.default_rng(0)
    r, n = M.shape
    subs = [np.ascontiguousarray(M[:, rng.choice(n, r, replace=False)]) for _ in range(64)]
    t0 = time.perf_counter()
    for i in range(repeat):
        core.lu_log_abs_det(subs[i % 64], 1e-12)
    return (time.perf_counter() - t0) / repeat


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    A = incidence_feature_matrix(complete_graph(10)).data
    rng = np.random.default_rng(1)
    c = rng.standard_normal(A.shape[1])
    xs = [A @ rng.uniform(size=A.shape[1]) for _ in range(32)]
    kernels = [("python", _core_py)]
    if _backend.core_compiled is not None:
        kernels.insert(0, ("cython", _backend.core_compiled))
    else:
        print("compiled extension not built; timing the Python kernels only")
    print(f"{'kernel':<8} {'simplex 9x45 (us)':>18} {'logdet 9x9 (us)':>16}")
    res = {}
    for name, core in kernels:
        rep = args.repeat if name == "cython" else max(10, args.repeat // 10)
        res[name] = (time_simplex(core, A, c, xs, rep) * 1e6, time_logdet(core, A, rep) * 1e6)
        print(f"{name:<8} {res[name][0]:>18.1f} {res[name][1]:>16.2f}")
    if len(res) == 2:
        print(f"speedup  {res['python'][0] / res['cython'][0]:>18.1f} "
              f"{res['python'][1] / res['cython'][1]:>16.1f}")


if __name__ == "__main__":
    main()
