"""Compiled vs pure-Python kernels: exact transport and jittered base orbits.

Usage::

    python benchmarks/bench_kernels.py [--repeat 3] [--json out.json]

Each kernel runs on identical inputs under both backends; results are
checked for agreement before timings are reported.
"""
import argparse
import json
import sys
import time

import numpy as np

from fiberlift import _fallback
from fiberlift._util import keyed_rng

try:
    from fiberlift import _kernels
except ImportError:  # extension not built
    _kernels = None


def _best(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def emd_cases():
    for n in (20, 60, 150):
        rng = keyed_rng(2024, n)
        a = rng.random(n)
        b = rng.random(n)
        a /= a.sum()
        b /= b.sum()
        C = np.abs(rng.random((n, 1)) - rng.random((1, n)))
        yield f"emd n={n}", (lambda mod, a=a, b=b, C=C: mod.emd(a, b, C)), lambda r: r[3]


def orbit_cases():
    for length in (10_000, 200_000):
        noise = keyed_rng(2024, 1, length).uniform(-2**-48, 2**-48, length)
        yield (f"orbit doubling L={length}",
               (lambda mod, z=noise: mod.base_orbit(0, 2.0, 0.1234, z)),
               lambda r: float(np.asarray(r)[-1]))
        yield (f"orbit pm L={length}",
               (lambda mod, z=noise: mod.base_orbit(1, 0.3, 0.1234, z)),
               lambda r: float(np.asarray(r)[-1]))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--json", help="write timings as JSON")
    args = p.parse_args(argv)
    if _kernels is None:
        print("compiled extension not available; only the fallback can run", file=sys.stderr)
    rows = []
    print(f"{'case':28s} {'python [s]':>12s} {'cython [s]':>12s} {'speedup':>9s}")
    for name, run, key in [*emd_cases(), *orbit_cases()]:
        tp, rp = _best(lambda: run(_fallback), args.repeat)
        if _kernels is not None:
            tc, rc = _best(lambda: run(_kernels), args.repeat)
            if not np.isclose(key(rp), key(rc), rtol=1e-9, atol=1e-12):
                raise SystemExit(f"{name}: backends disagree ({key(rp)!r} vs {key(rc)!r})")
        else:
            tc = float("nan")
        rows.append({"case": name, "python": tp, "cython": tc, "speedup": tp / tc})
        print(f"{name:28s} {tp:12.4f} {tc:12.4f} {tp / tc:9.1f}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
