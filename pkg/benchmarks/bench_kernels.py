#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure numpy fallback.

Both paths implement the same clamped-border semantics; this script times
them on restoration-sized inputs, checks agreement, and prints speedups.

    python3 benchmarks/bench_kernels.py [--size 64] [--repeats 20]
"""

import argparse
import time

import numpy as np

from resteer.kernels import numba_impl, numpy_impl


def timeit(fn, repeats):
    fn()  # warm up (numba JIT compile)
    start = time.perf_counter()
    for _ in range(repeats):
        out = fn()
    return (time.perf_counter() - start) / repeats, out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--size", type=int, default=64)
    parser.add_argument("--repeats", type=int, default=20)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    a = rng.uniform(0, 1, (args.size, args.size))
    b = rng.uniform(0, 1, (args.size, args.size))
    kernel = np.full((5, 5), 1.0 / 25.0)

    cases = [
        ("box_mean w=7", lambda impl: impl.box_mean(a, 7), 1e-10),
        ("local_mean_var w=7", lambda impl: impl.local_mean_var(a, 7)[1], 1e-9),
        ("local_ssim_map w=7", lambda impl: impl.local_ssim_map(a, b, 7, 1e-4, 9e-4), 1e-9),
        ("tv_chambolle 30it", lambda impl: impl.tv_chambolle(a, 0.1, 30), 1e-12),
        ("nlm_filter 5/11", lambda impl: impl.nlm_filter(a, 0.2, 5, 11), 1e-9),
        ("conv2d_zero 5x5", lambda impl: impl.conv2d_zero(a, kernel), 1e-12),
    ]

    print(f"size {args.size}x{args.size}, {args.repeats} repeats per case")
    print(f"{'kernel':<22}{'numpy':>12}{'numba':>12}{'speedup':>10}")
    for name, call, tol in cases:
        t_np, out_np = timeit(lambda: call(numpy_impl), args.repeats)
        t_nb, out_nb = timeit(lambda: call(numba_impl), args.repeats)
        np.testing.assert_allclose(out_np, out_nb, rtol=tol, atol=tol)
        print(f"{name:<22}{t_np * 1e3:>10.3f}ms{t_nb * 1e3:>10.3f}ms{t_np / t_nb:>9.1f}x")
    print("agreement checked on every case")


if __name__ == "__main__":
    main()
