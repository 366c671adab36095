"""Time the numba kernels against their numpy twins.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both backends are called directly from ``kernels.IMPLEMENTATIONS``, so the
environment flag does not matter here. Results are checked for equality
before timing.
"""

from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from glyphforge import kernels
from glyphforge.geometry import flatten, sample_uniform
from glyphforge.path_model import parse_path

GLYPH = ("M 100 0 Q 100 41.4 70.7 70.7 Q 41.4 100 0 100 Q -41.4 100 -70.7 70.7 Q -100 41.4 -100 0 "
         "Q -100 -41.4 -70.7 -70.7 Q -41.4 -100 0 -100 Q 41.4 -100 70.7 -70.7 Q 100 -41.4 100 0 Z "
         "M 60 0 L 0 -60 L -60 0 L 0 60 Z")


def nearest_case(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-1, 1, (n, 2)), rng.uniform(-1, 1, (n, 2))


def crossings_case(size: int):
    polys = flatten(parse_path(GLYPH))
    n = size * 4
    edges = []
    for poly in polys:
        xy = (poly / 250.0 + 0.5) * n
        edges.append(np.concatenate([xy, np.roll(xy, -1, axis=0)], axis=1))
    return np.concatenate(edges), n, n


def bench(fn, args, repeat: int) -> float:
    fn(*args)  # warm-up (numba compiles here)
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = sorted(kernels.IMPLEMENTATIONS)
    if "numba" not in backends:
        print("numba is not installed; only the numpy kernels can be timed", file=sys.stderr)

    cases = [(f"nearest n={n}", "nearest", nearest_case(n)) for n in (200, 1000, 4000)]
    cases.append(("nearest glyph cloud n=200", "nearest",
                  (sample_uniform(parse_path(GLYPH), 200).points, sample_uniform(parse_path(GLYPH), 200).points)))
    cases += [(f"crossings size={s}", "crossings", crossings_case(s)) for s in (64, 192, 512)]

    print(f"{'case':<28}" + "".join(f"{b:>12}" for b in backends) + ("  numba speedup" if len(backends) > 1 else ""))
    for label, kernel, case in cases:
        outs = [kernels.IMPLEMENTATIONS[b][kernel](*case) for b in backends]
        first = outs[0] if isinstance(outs[0], tuple) else (outs[0],)
        for other in outs[1:]:
            other = other if isinstance(other, tuple) else (other,)
            assert all(np.array_equal(x, y) for x, y in zip(first, other)), f"{label}: backends disagree"
        times = [bench(kernels.IMPLEMENTATIONS[b][kernel], case, args.repeat) for b in backends]
        row = f"{label:<28}" + "".join(f"{t * 1e3:>10.3f}ms" for t in times)
        if len(times) > 1:
            by = dict(zip(backends, times))
            row += f"  {by['numpy'] / by['numba']:>12.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    sys.exit(main())
