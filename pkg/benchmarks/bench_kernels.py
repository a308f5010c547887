"""Compare the compiled and numpy convolution kernels.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--orders 4 8 16 32]

Times ``convolve2d`` on random coefficient blocks of the sizes produced by
``multiply_project(..., mode="oracle")`` at each order, checks that both
backends agree, and prints one line per order.
"""
import argparse
import timeit

import numpy as np

from anelastic.kernels import available_backends


def blocks(m, rng):
    shape = (2 * m + 1, 2 * m + 1)
    a = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    b = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return a, b


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--orders", type=int, nargs="+", default=[4, 8, 16, 32])
    args = parser.parse_args(argv)

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the numpy kernel is timed")
    rng = np.random.default_rng(0)
    print(f"{'m':>4} " + " ".join(f"{name + ' [ms]':>16}" for name in backends) + f" {'speedup':>9} {'max diff':>10}")
    for m in args.orders:
        a, b = blocks(m, rng)
        times, outs = {}, {}
        for name, fn in backends.items():
            number = max(1, int(2000 // (2 * m + 1) ** 2))
            best = min(timeit.repeat(lambda: fn(a, b), number=number, repeat=args.repeat)) / number
            times[name] = best * 1e3
            outs[name] = fn(a, b)
        speed = times["python"] / times["compiled"] if "compiled" in times else float("nan")
        diff = float(np.max(np.abs(outs["compiled"] - outs["python"]))) if "compiled" in outs else 0.0
        print(f"{m:>4} " + " ".join(f"{times[n]:>16.4f}" for n in backends) + f" {speed:>9.1f} {diff:>10.2e}")


if __name__ == "__main__":
    main()
