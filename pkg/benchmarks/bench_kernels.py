"""
Compare the compiled Monte Carlo kernels with the numpy fallback.

Run from the repository root after building the extension::

    python benchmarks/bench_kernels.py [--draws 1000000] [--repeat 5]

Both backends draw the same SplitMix64 stream, so the hit counts printed for
each backend should agree.
"""

import argparse
import math
import timeit

import numpy as np

from repssd import _fallback
from repssd.numeric import seed_key

try:
    from repssd import _kernels
except ImportError:
    _kernels = None


def bench(mod, key, draws, repeat):
    lowers = np.array([0.1])
    uppers = np.array([math.inf])

    def normals():
        mod.standard_normals(key, 0, draws)

    def hits():
        return mod.count_region_hits(key, 0.205, 0.051, 0.05, 0.0593, lowers, uppers, draws)

    t_norm = min(timeit.repeat(normals, number=1, repeat=repeat))
    t_hits = min(timeit.repeat(hits, number=1, repeat=repeat))
    return t_norm, t_hits, int(hits())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--draws", type=int, default=10 ** 6)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)
    key = seed_key(args.seed)

    backends = [("python", _fallback)]
    if _kernels is None:
        print("compiled kernels not built; timing the fallback only")
    else:
        backends.insert(0, ("cython", _kernels))

    print(f"{args.draws} draws, best of {args.repeat}")
    print(f"{'backend':<10}{'normals (s)':>14}{'region hits (s)':>18}{'hits':>12}")
    times = {}
    for name, mod in backends:
        t_norm, t_hits, h = bench(mod, key, args.draws, args.repeat)
        times[name] = (t_norm, t_hits)
        print(f"{name:<10}{t_norm:>14.4f}{t_hits:>18.4f}{h:>12}")
    if len(times) == 2:
        c, p = times["cython"], times["python"]
        print(f"speed-up: normals {p[0] / c[0]:.1f}x, region hits {p[1] / c[1]:.1f}x")


if __name__ == "__main__":
    main()
