"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--reps 50]

Prints median wall time per call for each kernel and backend, plus the max
absolute difference between the two outputs.
"""

import argparse
import statistics
import time

import numpy as np

from sharp import _pykernels

try:
    from sharp import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _cases(rng):
    thetas = 10000.0 ** (-np.arange(16) / 16)
    ratios = 128 * thetas / (2 * np.pi)
    values = rng.standard_normal((4096, 64))
    angles = rng.uniform(-np.pi, np.pi, (4096, 32))
    cc, cs = rng.standard_normal(16), rng.standard_normal(16)
    offsets = np.arange(512, dtype=np.float64)
    power = rng.random((512, 512))
    return {
        "blend_frequencies": (thetas, ratios, 2.0, 1.0, 32.0),
        "rotate_pairs": (values, angles),
        "pair_scores": (cc, cs, thetas, offsets),
        "radial_sums": (power, 256.0, 256.0, 363),
    }


def _median_time(fn, args, reps):
    fn(*args)
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def _maxdiff(a, b):
    if isinstance(a, tuple):
        return max(_maxdiff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--reps", type=int, default=50)
    args = ap.parse_args()
    cases = _cases(np.random.default_rng(0))
    print(f"{'kernel':<20}{'numpy (us)':>12}{'cython (us)':>13}{'speedup':>9}{'max |diff|':>12}")
    for name, call_args in cases.items():
        py = _median_time(getattr(_pykernels, name), call_args, args.reps)
        if _ckernels is None:
            print(f"{name:<20}{py * 1e6:>12.1f}{'n/a':>13}")
            continue
        cy = _median_time(getattr(_ckernels, name), call_args, args.reps)
        diff = _maxdiff(getattr(_pykernels, name)(*call_args), getattr(_ckernels, name)(*call_args))
        print(f"{name:<20}{py * 1e6:>12.1f}{cy * 1e6:>13.1f}{py / cy:>9.2f}{diff:>12.2g}")


if __name__ == "__main__":
    main()
