"""Timing of the compiled Bessel kernel against the pure-Python fallback.

Usage:  python benchmarks/bench_bessel.py [--points N] [--repeat R]

Both kernels evaluate the scaled (I_m, K_m, I_m', K_m') on the same
arguments; the script reports the best-of-R wall time per call, the
speed-up and the largest relative difference between the two results.
"""

import argparse
import timeit

import numpy as np

from vortexstab import _bessel_fallback

try:
    from vortexstab import _bessel_core
except ImportError:  # extension not built
    _bessel_core = None


def rel_diff(a, b):
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--points", type=int, default=2000, help="arguments per call")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--orders", default="0,1,4,12")
    args = ap.parse_args(argv)

    x = np.logspace(-2, 2.5, args.points)
    orders = [int(v) for v in args.orders.split(",")]
    if _bessel_core is None:
        print("compiled kernel not available; timing the fallback only")
    print(f"{'m':>3} {'python [ms]':>12} {'compiled [ms]':>14} {'speed-up':>9} {'max rel diff':>13}")
    for m in orders:
        t_py = min(timeit.repeat(lambda: _bessel_fallback.ik_scaled(m, x), number=1, repeat=args.repeat))
        if _bessel_core is None:
            print(f"{m:>3} {1e3 * t_py:12.3f} {'-':>14} {'-':>9} {'-':>13}")
            continue
        t_c = min(timeit.repeat(lambda: _bessel_core.ik_scaled(m, x), number=1, repeat=args.repeat))
        diff = max(rel_diff(a, b) for a, b in zip(_bessel_core.ik_scaled(m, x), _bessel_fallback.ik_scaled(m, x)))
        print(f"{m:>3} {1e3 * t_py:12.3f} {1e3 * t_c:14.3f} {t_py / t_c:9.1f} {diff:13.2e}")


if __name__ == "__main__":
    main()
