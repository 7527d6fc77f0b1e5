"""Compare the compiled extension against the pure-numpy fallback.

Times the two hot kernels (per-round posterior conditioning and the
rare-switching selection loop) and one end-to-end sequential-UCB trial.

Usage: python benchmarks/bench_backends.py [--rounds 20000] [--n 100]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cgbandits import _slowpath
from cgbandits.kernels import KernelSpec, grid_domain, gram_matrix

try:
    from cgbandits import _fastpath
except ImportError:
    _fastpath = None


def bench_condition(mod, K, rounds):
    n = K.shape[0]
    cov = K.copy()
    var = np.ascontiguousarray(np.diag(K)).copy()
    mean = np.zeros(n)
    rng = np.random.default_rng(0)
    idx = rng.integers(0, n, size=rounds)
    ys = rng.normal(size=rounds)
    t0 = time.perf_counter()
    for i in range(rounds):
        mod.condition_update(cov, var, mean, int(idx[i]), float(ys[i]), 1.0)
    return time.perf_counter() - t0


def bench_select(mod, K, rounds):
    t0 = time.perf_counter()
    mod.select_epoch(K, 1.0, 2.0, rounds)
    return time.perf_counter() - t0


def bench_trial(backend_name, rounds):
    import importlib
    import os

    os.environ["CGB_BACKEND"] = backend_name
    import cgbandits._backend as backend

    importlib.reload(backend)
    import cgbandits.algorithms as algorithms

    importlib.reload(algorithms)
    from cgbandits.adversary import AttackLedger
    from cgbandits.environment import Environment, sample_gp_function, stream

    dom = grid_domain(-5.0, 5.0, 10, 2)
    kern = KernelSpec("se", 0.5)
    env = Environment(dom, sample_gp_function(kern, dom, 7), sigma=0.02)
    t0 = time.perf_counter()
    algorithms.run_gp_ucb(
        algorithms.UcbSchedule(), kern, env, AttackLedger(policy="none"),
        rounds, stream(0, 0, 0),
    )
    return time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rounds", type=int, default=20_000)
    ap.add_argument("--n", type=int, default=100)
    args = ap.parse_args()

    dom = grid_domain(-5.0, 5.0, int(round(args.n**0.5)), 2)
    K = gram_matrix(KernelSpec("se", 0.5), dom.points)
    print(f"domain {K.shape[0]} points, {args.rounds} rounds\n")
    print(f"{'kernel':<22}{'python':>12}{'compiled':>12}{'speedup':>10}")

    rows = [("condition_update", bench_condition), ("select_epoch", bench_select)]
    for name, fn in rows:
        t_py = fn(_slowpath, K, args.rounds)
        if _fastpath is None:
            print(f"{name:<22}{t_py:>11.3f}s{'n/a':>12}{'':>10}")
        else:
            t_c = fn(_fastpath, K, args.rounds)
            print(f"{name:<22}{t_py:>11.3f}s{t_c:>11.3f}s{t_py / t_c:>9.1f}x")

    t_py = bench_trial("python", args.rounds)
    line = f"{'ucb trial (e2e)':<22}{t_py:>11.3f}s"
    if _fastpath is not None:
        t_c = bench_trial("compiled", args.rounds)
        line += f"{t_c:>11.3f}s{t_py / t_c:>9.1f}x"
    else:
        line += f"{'n/a':>12}"
    print(line)


if __name__ == "__main__":
    main()
