"""Compare the compiled and numpy kernel backends.

Times the bias-corrected discontinuity fit (the hot loop) at several sample
sizes and one full flexible boundary sweep, per backend::

    python benchmarks/bench_backends.py [--repeat 5]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

import brdd
from brdd import boundary as bd
from brdd.data import validate_and_normalize
from brdd.dgp import DgpConfig, generate
from brdd.engine import BandwidthPair, sharp_discontinuity


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = brdd.available_backends()
    rng = np.random.default_rng(0)
    cases = []
    for n in (1_000, 10_000, 100_000, 1_000_000):
        x = rng.uniform(-1, 1, n)
        y = 0.3 * (x >= 0) + x + 0.1 * rng.standard_normal(n)
        cases.append((f"rbc fit n={n:,}", lambda x=x, y=y: sharp_discontinuity(x, y, 0.0, BandwidthPair.manual(0.3))))
    cfg = DgpConfig(n=100_000, compliance=1.0, noise_sd=0.05, seed=0)
    ds = validate_and_normalize(generate(cfg), cfg.rule)
    cases.append(("flexible B1 sweep n=100,000", lambda: bd.flexible_boundary_curve(ds, "B1")))
    cases.append(("flexible B2 sweep n=100,000", lambda: bd.flexible_boundary_curve(ds, "B2")))

    print(f"{'case':<30}" + "".join(f"{b:>12}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for label, fn in cases:
        row = []
        for b in backends:
            brdd.set_backend(b)
            fn()
            row.append(best_of(fn, args.repeat))
        line = f"{label:<30}" + "".join(f"{t * 1e3:>10.2f}ms" for t in row)
        if len(row) > 1:
            line += f"{row[1] / row[0]:>11.1f}x"
        print(line)


if __name__ == "__main__":
    main()
