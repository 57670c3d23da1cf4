"""Benchmark the compiled LSTM kernels against the numpy fallback.

Usage:
    python benchmarks/bench_kernels.py [--repeats 30]

Runs the sequence forward and forward+backward paths at the dims the
training loops actually use and prints a per-size comparison. The two
implementations are also checked against each other (allclose) before
timing.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from cdv.nn import kernels_py

try:
    from cdv.nn import _kernels
except ImportError:
    _kernels = None

SIZES = [
    # (label, T, input_dim, hidden)
    ("entity encoder sentence", 8, 32, 64),
    ("document encoder, short doc", 20, 37, 64),
    ("document encoder, long doc", 96, 37, 64),
    ("paper-scale step", 64, 128, 512),
]


def run_case(impl, W, U, b, X, dH, with_backward):
    H, G, C, TC = impl.lstm_seq_forward(W, U, b, X)
    if with_backward:
        impl.lstm_seq_backward(W, U, X, H, G, C, TC, dH)
    return H


def time_impl(impl, W, U, b, X, dH, with_backward, repeats):
    run_case(impl, W, U, b, X, dH, with_backward)  # warmup
    start = time.perf_counter()
    for _ in range(repeats):
        run_case(impl, W, U, b, X, dH, with_backward)
    return (time.perf_counter() - start) / repeats


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeats", type=int, default=30)
    args = parser.parse_args()

    if _kernels is None:
        print("compiled kernels not built; only the numpy fallback is available")

    rng = np.random.default_rng(0)
    header = f"{'case':32s} {'T':>4s} {'dims':>9s} {'numpy':>10s} {'compiled':>10s} {'speedup':>8s}"
    for with_backward in (False, True):
        print(("forward+backward" if with_backward else "forward only").upper())
        print(header)
        for label, T, d, h in SIZES:
            W = rng.normal(size=(4 * h, d)) * 0.1
            U = rng.normal(size=(4 * h, h)) * 0.1
            b = rng.normal(size=4 * h) * 0.1
            X = rng.normal(size=(T, d))
            dH = rng.normal(size=(T, h))
            t_py = time_impl(kernels_py, W, U, b, X, dH, with_backward, args.repeats)
            if _kernels is not None:
                ref = kernels_py.lstm_seq_forward(W, U, b, X)
                got = _kernels.lstm_seq_forward(W, U, b, X)
                for r, g in zip(ref, got):
                    np.testing.assert_allclose(g, r, rtol=1e-10, atol=1e-12)
                t_cy = time_impl(_kernels, W, U, b, X, dH, with_backward, args.repeats)
                speedup = t_py / t_cy
                print(
                    f"{label:32s} {T:4d} {f'{d}->{h}':>9s} {t_py * 1e3:9.3f}ms"
                    f" {t_cy * 1e3:9.3f}ms {speedup:7.1f}x"
                )
            else:
                print(f"{label:32s} {T:4d} {f'{d}->{h}':>9s} {t_py * 1e3:9.3f}ms {'n/a':>10s}")
        print()


if __name__ == "__main__":
    main()
