"""Time the compiled and numpy kernel backends on the same inputs.

    python benchmarks/bench_kernels.py --days 20000 --repeat 7

Each row reports the best wall time over ``--repeat`` runs and checks that
both backends agree exactly before timing anything.
"""
import argparse
import time

import numpy as np

from smokebench.kernels import BACKENDS


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--days", type=int, default=20000, help="rows of 24 hourly values")
    ap.add_argument("--points", type=int, default=200000, help="locations for the distance kernel")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    m = rng.gamma(2.0, 8.0, size=(args.days, 24))
    f = rng.gamma(2.0, 8.0, size=(args.days, 24))
    lats = rng.uniform(25.0, 50.0, size=args.points)
    lons = rng.uniform(-125.0, -65.0, size=args.points)

    cases = {
        "excess_exposure_batch": lambda k: k.excess_exposure_batch(m, f),
        "random_hour_excess_batch": lambda k: k.random_hour_excess_batch(m),
        "squared_error_sums": lambda k: k.squared_error_sums(m, f),
        "haversine_batch": lambda k: k.haversine_batch(40.0, -100.0, lats, lons),
    }
    if "cython" not in BACKENDS:
        print("compiled backend not built; timing numpy only")

    ref = BACKENDS["numpy"]
    for name, call in cases.items():
        if "cython" in BACKENDS:
            a, b = call(ref), call(BACKENDS["cython"])
            a = a if isinstance(a, tuple) else (a,)
            b = b if isinstance(b, tuple) else (b,)
            for x, y in zip(a, b):
                np.testing.assert_allclose(x, y, rtol=1e-12, atol=0)
        row = [f"{name:26s}"]
        timings = {}
        for backend, mod in BACKENDS.items():
            timings[backend] = best_of(lambda: call(mod), args.repeat)
            row.append(f"{backend} {timings[backend] * 1e3:8.2f} ms")
        if "cython" in timings:
            row.append(f"speedup {timings['numpy'] / timings['cython']:5.2f}x")
        print("  ".join(row))


if __name__ == "__main__":
    main()
