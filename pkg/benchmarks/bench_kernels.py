"""Compiled vs numpy kernels for the sequence enumeration used by the type machinery.

Usage: python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from eaqmac import _kernels_py

try:
    from eaqmac import _kernels
except ImportError:
    _kernels = None

CASES = [(8, 2), (12, 2), (16, 2), (6, 4), (8, 4), (10, 3)]


def bench(fn, repeat: int) -> float:
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the fallback is available")
        return
    print(f"{'kernel':<15}{'n':>4}{'d':>4}{'cython ms':>12}{'numpy ms':>12}{'speedup':>9}")
    for n, d in CASES:
        for name, fast, slow in [
            ("letter_counts", lambda: _kernels.letter_counts(n, d), lambda: _kernels_py.letter_counts(n, d)),
            ("count_keys", lambda: _kernels.count_keys(n, d), lambda: _kernels_py.count_keys(n, d)),
        ]:
            assert np.allclose(fast(), slow())
            tf, ts = bench(fast, args.repeat), bench(slow, args.repeat)
            print(f"{name:<15}{n:>4}{d:>4}{tf * 1e3:>12.3f}{ts * 1e3:>12.3f}{ts / tf:>8.1f}x")


if __name__ == "__main__":
    main()
