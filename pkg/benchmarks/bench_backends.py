"""Times the hot kernels under the numba build and the numpy fallback.

Run from the repository root:

    python benchmarks/bench_backends.py [--n 15] [--sweeps 200]

The first numba call includes JIT compilation; a warm-up call is timed out
of band so the table reports steady-state throughput.
"""
import argparse
import time

import numpy as np

from ardnet.backend import HAS_NUMBA, use_backend
from ardnet.dynamics import run_sweeps
from ardnet.experiments import design2_model, synthetic_ages
from ardnet.meanfield import MeanFieldOptions, fixed_point_solve
from ardnet.model import ModelContext, Network, Theta


def time_call(fn, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_sweeps(backend, n, sweeps, seed=0):
    X = synthetic_ages(n)
    model = design2_model()
    theta = Theta.from_vector(model, [1.0, -1.0, 0.1])
    ctx = ModelContext(model, X)
    U, M, V = ctx.matrices(theta)

    def run():
        g = Network.empty(n)
        run_sweeps(g.adj, U, M, V, ctx.pairs, sweeps, np.random.default_rng(seed))

    with use_backend(backend):
        run()  # warm-up / compile
        return time_call(run)


def bench_meanfield(backend, n):
    X = synthetic_ages(n)
    model = design2_model()
    theta = Theta.from_vector(model, [1.0, -1.0, 0.3])
    opts = MeanFieldOptions(tol=1e-10, restarts=1)

    def run():
        fixed_point_solve(X, model, theta, opts)

    with use_backend(backend):
        run()
        return time_call(run)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=15)
    parser.add_argument("--sweeps", type=int, default=200)
    args = parser.parse_args()

    backends = ["numpy"] + (["numba"] if HAS_NUMBA else [])
    if not HAS_NUMBA:
        print("numba not importable; timing the numpy build only")

    rows = []
    for backend in backends:
        t_sweep = bench_sweeps(backend, args.n, args.sweeps)
        t_mf = bench_meanfield(backend, args.n)
        rows.append((backend, t_sweep, t_mf))

    print(f"n={args.n}, {args.sweeps} sweeps per call")
    print(f"{'backend':<8} {'sweeps [s]':>12} {'meanfield solve [s]':>22}")
    for backend, t_sweep, t_mf in rows:
        print(f"{backend:<8} {t_sweep:>12.4f} {t_mf:>22.4f}")
    if len(rows) == 2:
        print(
            f"speedup  {rows[1][0]} vs {rows[0][0]}: "
            f"sweeps x{rows[0][1] / rows[1][1]:.1f}, "
            f"meanfield x{rows[0][2] / rows[1][2]:.1f}"
        )


if __name__ == "__main__":
    main()
