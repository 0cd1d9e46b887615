"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from scalloc import _fallback
from scalloc.stream import LFSR_TAPS

try:
    from scalloc import _kernels as compiled
except ImportError:
    compiled = None


def workloads(rng):
    products = rng.integers(0, 2, size=(32, 64, 1024), dtype=np.uint8)
    counts = products.sum(axis=1, dtype=np.int32)
    select = rng.integers(0, 64, size=(32, 1024))
    mask = sum(1 << (t - 1) for t in LFSR_TAPS[16])
    return {
        "updown_counter (Btanh, 32x1024, n=64)": ("updown_counter", (2 * counts.astype(np.int64) - 64, 128)),
        "updown_counter (Stanh, 32x1024)": ("updown_counter", (2 * products[:, 0, :].astype(np.int64) - 1, 128)),
        "column_popcount (32x64x1024)": ("column_popcount", (products,)),
        "mux_gather (32x64x1024)": ("mux_gather", (products, select)),
        "lfsr_states (w=16, 65535 states)": ("lfsr_states", (1, mask, 16, 65535)),
    }


def best_time(fn, args, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if compiled is None:
        print("compiled extension not built; only the fallback can be timed")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<42} {'python ms':>10} {'compiled ms':>12} {'speedup':>8}")
    for label, (name, kargs) in workloads(rng).items():
        slow = best_time(getattr(_fallback, name), kargs, args.repeat)
        if compiled is None:
            print(f"{label:<42} {slow * 1e3:>10.2f} {'-':>12} {'-':>8}")
            continue
        np.testing.assert_array_equal(getattr(compiled, name)(*kargs), getattr(_fallback, name)(*kargs))
        fast = best_time(getattr(compiled, name), kargs, args.repeat)
        print(f"{label:<42} {slow * 1e3:>10.2f} {fast * 1e3:>12.3f} {slow / fast:>7.1f}x")


if __name__ == "__main__":
    main()
