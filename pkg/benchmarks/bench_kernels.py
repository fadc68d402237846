#!/usr/bin/env python3
"""Benchmark the convolution kernel backends at training shapes.

Runs the forward and backward depthwise convolutions for the encoder
(2 filters x 40 taps on 2x88 inputs) and decoder (1 x 81) geometries over
a training-sized batch, for every backend that is importable, and prints
a timing table. Usage:

    python benchmarks/bench_kernels.py [--batch 128] [--reps 50]
"""

import argparse
import time

import numpy as np

from radioae._kernels import _convnp

BACKENDS = {"numpy": _convnp}
try:
    from radioae._kernels import _convext

    BACKENDS["cython"] = _convext
except ImportError:
    pass


def bench(fn, reps):
    fn()  # warm-up
    t0 = time.perf_counter()
    for _ in range(reps):
        fn()
    return (time.perf_counter() - t0) / reps * 1e3  # ms


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--batch", type=int, default=128)
    parser.add_argument("--reps", type=int, default=50)
    parser.add_argument("--dtype", choices=["float32", "float64"], default="float32")
    args = parser.parse_args()

    dtype = np.float32 if args.dtype == "float32" else np.float64
    rng = np.random.default_rng(0)
    cases = {
        "enc K=40 pad=40": (rng.normal(size=(args.batch, 2, 88)).astype(dtype),
                            rng.normal(size=(2, 40)).astype(dtype), 40),
        "dec K=81 pad=40": (rng.normal(size=(args.batch, 2, 88)).astype(dtype),
                            rng.normal(size=(1, 81)).astype(dtype), 40),
    }

    print(f"batch={args.batch} dtype={args.dtype} reps={args.reps}")
    print(f"{'case':<18} {'op':<8} " + " ".join(f"{n:>12}" for n in BACKENDS)
          + ("   speedup" if len(BACKENDS) > 1 else ""))
    for name, (x, w, pad) in cases.items():
        t_out = x.shape[2] + 2 * pad - w.shape[1] + 1
        d_out = rng.normal(size=(x.shape[0], w.shape[0], x.shape[1], t_out)).astype(dtype)
        for op, make in (("forward", lambda m: (lambda: m.conv1d_fwd(x, w, pad))),
                         ("backward", lambda m: (lambda: m.conv1d_bwd(x, w, pad, d_out)))):
            times = {n: bench(make(mod), args.reps) for n, mod in BACKENDS.items()}
            row = f"{name:<18} {op:<8} " + " ".join(f"{times[n]:>10.3f}ms" for n in BACKENDS)
            if len(times) > 1:
                row += f"   {times['numpy'] / times['cython']:>6.2f}x"
            print(row)


if __name__ == "__main__":
    main()
