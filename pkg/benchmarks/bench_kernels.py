"""Time the compiled kernels against the numpy fallback on the hot paths.

    python benchmarks/bench_kernels.py [--n 100000] [--repeat 3]

Both backends must return identical results; the script aborts otherwise.
"""

import argparse
import time

import numpy as np

from rggmax import _backend
from rggmax.geometry import build_grid
from rggmax.graph_atlas import canonical_codes


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(n, gen):
    pts = gen.random((n, 2))
    r = (4.0 / (np.pi * n)) ** 0.5  # about four neighbours per point
    cell = (2.0 / n) ** 0.5
    codes = gen.integers(0, 1 << 15, size=200_000)

    def threshold(backend):
        return build_grid(pts, cell, backend=backend).threshold(3)

    def degrees(backend):
        return build_grid(pts, r, backend=backend).degrees(r)

    def canon(backend):
        return canonical_codes(6, codes, backend=backend)

    return {"build_grid + threshold_radius(k=3)": threshold,
            "build_grid + degrees": degrees,
            "canonical_codes (200k six-vertex graphs)": canon}


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=100_000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    backends = sorted(_backend.BACKENDS)
    print(f"active backend: {_backend.BACKEND}; comparing {', '.join(backends)} at n={args.n}")
    print(f"{'case':44s}" + "".join(f"{b:>12s}" for b in backends) + f"{'speedup':>10s}")
    for name, fn in cases(args.n, np.random.default_rng(0)).items():
        times, results = {}, {}
        for b in backends:
            times[b], results[b] = best_of(lambda: fn(b), args.repeat)
        ref = results[backends[0]]
        for b in backends[1:]:
            if not np.array_equal(np.asarray(results[b]), np.asarray(ref)):
                raise SystemExit(f"{name}: backends disagree")
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        print(f"{name:44s}" + "".join(f"{times[b]:11.4f}s" for b in backends) + f"{speed:9.1f}x")


if __name__ == "__main__":
    main()
