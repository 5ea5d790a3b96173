"""Compare the compiled training kernels against the numpy fallback.

Runs the exact same workloads through both backends and reports wall
times plus the achieved losses (which must agree closely; the backends
differ only in summation order).

Usage: python benchmarks/bench_backends.py
"""

from __future__ import annotations

import time

import numpy as np

from plrnet import _py_kernels
from plrnet.mlp import Architecture, he_init

try:
    from plrnet import _kernels
except ImportError:
    _kernels = None


def make_problem(rng, n, d, widths):
    arch = Architecture(d, widths, 2.0)
    x = rng.uniform(-1, 1, (n, d))
    y = np.sin(2 * x[:, 0]) + 0.25 * rng.standard_normal(n)
    params = he_init(arch, rng)
    return arch, x, y, params


def bench_train(kernel, arch, x, y, params, epochs, batch, repeats=3):
    dims = np.asarray(arch.dims, dtype=np.int64)
    rng = np.random.default_rng(0)
    n_batches = max(1, x.shape[0] // batch)
    bidx = rng.integers(0, x.shape[0], size=(epochs, n_batches, batch), dtype=np.int64)
    best = np.inf
    mse = np.nan
    for _ in range(repeats):
        t0 = time.perf_counter()
        _, mse, _ = kernel.train_mlp(
            params.flat, dims, arch.output_bound, x, y, bidx,
            0.005, 0.9, 0.999, 1e-8, 0.0, epochs + 1,  # no early stop: fixed work
        )
        best = min(best, time.perf_counter() - t0)
    return best, mse


def bench_forward(kernel, arch, x, params, repeats=20):
    dims = np.asarray(arch.dims, dtype=np.int64)
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        kernel.batch_forward(params.flat, dims, arch.output_bound, x)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    if _kernels is None:
        print("compiled extension not available; nothing to compare")
        return
    rng = np.random.default_rng(42)
    cases = [
        ("small net, n=500", 500, 1, (9, 9), 100, 64),
        ("study net, n=2000", 2000, 1, (17, 17, 17), 100, 128),
        ("study net, n=4000", 4000, 1, (22, 22, 22), 100, 128),
        ("wide net, n=2000", 2000, 2, (64, 64), 50, 128),
    ]
    print(f"{'case':<22} {'compiled':>10} {'python':>10} {'speedup':>8}  loss parity")
    for label, n, d, widths, epochs, batch in cases:
        arch, x, y, params = make_problem(rng, n, d, widths)
        t_c, mse_c = bench_train(_kernels, arch, x, y, params, epochs, batch)
        t_p, mse_p = bench_train(_py_kernels, arch, x, y, params, epochs, batch)
        rel = abs(mse_c - mse_p) / max(mse_c, 1e-12)
        print(
            f"{label:<22} {t_c:>9.3f}s {t_p:>9.3f}s {t_p / t_c:>7.1f}x"
            f"  |mse diff|/mse = {rel:.2e}"
        )
    # single-pass prediction
    arch, x, _, params = make_problem(rng, 100_000, 1, (22, 22, 22))
    t_c = bench_forward(_kernels, arch, x, params)
    t_p = bench_forward(_py_kernels, arch, x, params)
    print(
        f"{'batch forward, n=1e5':<22} {t_c:>9.3f}s {t_p:>9.3f}s {t_p / t_c:>7.1f}x"
    )


if __name__ == "__main__":
    main()
