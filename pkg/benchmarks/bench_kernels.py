"""Compare the compiled and pure-Python Jacobi eigensolvers.

Times ``kernels.jacobi_eigh`` on random Hermitian matrices of the sizes the
solver sees (up to 16 at desk scale), then one full strategy-norm solve per
backend.  Run with ``python benchmarks/bench_kernels.py``.
"""

import argparse
import time

import numpy as np

from stratnorm import kernels
from stratnorm.norms import strategy_norm
from stratnorm.strategies import InteractionShape, random_hermitian


def _hermitian(n, rng):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return 0.5 * (g + g.conj().T)


def time_eigh(backend, n, reps, seed=0):
    rng = np.random.default_rng(seed)
    mats = [_hermitian(n, rng) for _ in range(reps)]
    with kernels.use_backend(backend):
        t0 = time.perf_counter()
        for m in mats:
            kernels.jacobi_eigh(m)
        return (time.perf_counter() - t0) / reps


def time_norm(backend, r, seed=0):
    shape = InteractionShape.uniform(r)
    x = random_hermitian(shape.canonical_factors, seed)
    with kernels.use_backend(backend):
        t0 = time.perf_counter()
        res = strategy_norm(x, shape)
        return time.perf_counter() - t0, res.value


def main():
    parser = argparse.ArgumentParser(description="Jacobi kernel benchmark")
    parser.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 16, 32])
    parser.add_argument("--reps", type=int, default=50)
    parser.add_argument("--rounds", type=int, default=2)
    args = parser.parse_args()

    backends = kernels.available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'n':>4s} " + " ".join(f"{b:>14s}" for b in backends) + "   speedup")
    for n in args.sizes:
        times = {b: time_eigh(b, n, args.reps) for b in backends}
        row = " ".join(f"{times[b] * 1e3:11.3f} ms" for b in backends)
        ratio = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        print(f"{n:4d} {row}   {ratio:6.1f}x")

    print(f"\nstrategy norm, r={args.rounds}, dims 2:")
    values = {}
    for b in backends:
        t, v = time_norm(b, args.rounds)
        values[b] = v
        print(f"  {b:>9s}: {t:7.2f} s  value {v:.12f}")
    if len(values) > 1:
        print(f"  max value difference: {np.ptp(list(values.values())):.2e}")


if __name__ == "__main__":
    main()
