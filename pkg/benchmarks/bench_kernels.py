"""Compare the compiled kernels with the pure-Python fallback.

Run with ``python3 benchmarks/bench_kernels.py``. Each line reports the best
of several repeats for both backends and the speedup.
"""

import argparse
import time

import numpy as np

from gofdm import _fallback

try:
    from gofdm import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    N, K = 256, 4
    zp = rng.standard_normal((N, K)) + 1j * rng.standard_normal((N, K))
    zq = rng.standard_normal((N, K)) + 1j * rng.standard_normal((N, K))
    taus = np.arange(N, dtype=np.int64)
    freqs = np.linspace(-7200.0, 7200.0, 5)
    ts, tc = 1 / (N * 120e3), (N + 18) / (N * 120e3)
    block = rng.standard_normal((8, 9, 2048)) + 1j * rng.standard_normal((8, 9, 2048))
    mask = np.ones(9, dtype=np.uint8)
    return {
        "af_direct_grid N=256 K=4 J=5": lambda m: m.af_direct_grid(zp, zq, taus, freqs, ts, tc),
        "gold_bits 100k": lambda m: m.gold_bits(12345, 100_000, 1600),
        "peak_search 8x9x2048": lambda m: m.peak_search(block, 3, 10, mask),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the fallback is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'compiled s':>11s} {'fallback s':>11s} {'speedup':>8s}")
    for name, call in cases(rng).items():
        t_py = best_of(lambda: call(_fallback), args.repeat)
        if _kernels is None:
            print(f"{name:34s} {'-':>11s} {t_py:11.4f} {'-':>8s}")
            continue
        t_c = best_of(lambda: call(_kernels), args.repeat)
        print(f"{name:34s} {t_c:11.4f} {t_py:11.4f} {t_py / t_c:8.1f}x")


if __name__ == "__main__":
    main()
