"""Time the numba kernels against their numpy/scipy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]

Compilation happens in a warm-up call and is not timed.  Every pair of
results is also compared, so a speed-up never hides a wrong answer.
"""

import argparse
import time

import numpy as np

from gfnn import _kernels as K
from gfnn.data import two_circles
from gfnn.graph import FilterSpec, erdos_renyi, operator


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(scale):
    n = int(20_000 * scale)
    g = erdos_renyi(n, 10.0 / n, 0)
    op = operator(g, FilterSpec("leftnorm", 1.0, 1))
    X = np.random.default_rng(0).standard_normal((n, 64))
    yield "spmm", (op.indptr, op.indices, op.data, X), K.csr_matmat_numba, K.csr_matmat_numpy, np.allclose

    pts, _ = two_circles(int(4000 * scale) // 2 * 2, 0.05, 0)
    yield "knn", (pts, 5), K.knn_numba, K.knn_numpy, np.array_equal

    walks = int(200_000 * scale)
    rng = np.random.default_rng(1)
    starts = rng.integers(0, g.n, size=walks).astype(np.int64)
    u = rng.random((walks, 6))
    yield "walks", (g.indptr, g.indices, 1.0, starts, u), K.walk_returns_numba, K.walk_returns_numpy, \
        lambda a, b: a == b


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0)
    args = ap.parse_args()
    if not K.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'kernel':<8}{'numba [ms]':>12}{'numpy [ms]':>12}{'speed-up':>10}  agree")
    for name, inputs, fast, slow, same in cases(args.scale):
        fast(*inputs)
        t_fast, a = best_of(lambda: fast(*inputs), args.repeat)
        t_slow, b = best_of(lambda: slow(*inputs), args.repeat)
        print(f"{name:<8}{1e3 * t_fast:>12.2f}{1e3 * t_slow:>12.2f}{t_slow / t_fast:>9.1f}x  {bool(same(a, b))}")


if __name__ == "__main__":
    main()
