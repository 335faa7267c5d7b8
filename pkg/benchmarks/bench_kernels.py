"""Compiled kernels versus the pure-Python twin.

Run with ``python benchmarks/bench_kernels.py [--repeat N] [--threads N]``.
Each case is timed on both backends, the best of ``repeat`` runs is kept
and the maximum absolute difference between the two results is reported.
"""

import argparse
import math
import time

import numpy as np

from sipkit import _backend, _purepy

try:
    from sipkit import _kernels as compiled
except ImportError:  # extension not built
    compiled = None

UNIFORM = (0, 0.0, 0.0)
BETA22 = (2, 2.0, 2.0)


def _cases(threads):
    q = np.ascontiguousarray(np.linspace(0.005, 0.995, 200))
    qs = np.ascontiguousarray(np.linspace(0.01, 1.99, 200))
    e = np.ascontiguousarray(np.linspace(0.0, 1.0, 21))
    c = math.sqrt(0.18)
    z = np.ascontiguousarray(np.linspace(0.08, 1.0, 101))
    return [
        ("simpson sin on [0, pi]", lambda k: k.simpson(math.sin, 0.0, math.pi, 1e-12)[0]),
        ("arc_length x_L=0.4", lambda k: k.arc_length(0.08, 0.08, 1.0, 1e-12)),
        ("ansatz_cell_probability quadrant",
         lambda k: k.ansatz_cell_probability(0.0, 0.5, 0.0, 0.5, 1e-6)[0]),
        ("ansatz_cell_grid 20x20",
         lambda k: k.ansatz_cell_grid(e, e, tol=1e-6, threads=threads)[0]),
        ("product_pdf beta(2,2) 200 nodes",
         lambda k: k.product_pdf(q, *BETA22, *BETA22, tol=1e-8, threads=threads)[0]),
        ("sum_pdf beta(2,2) 200 nodes",
         lambda k: k.sum_pdf(qs, *BETA22, *BETA22, tol=1e-8, threads=threads)[0]),
        ("band_masses x_L=0.4, 100 segments",
         lambda k: k.band_masses(0.08, 0.5 * (0.4 + 1e-3) ** 2, z, *UNIFORM, *UNIFORM)[0]),
        ("product_partial uniform", lambda k: k.product_partial(c * c, 0.3, 0.9, *UNIFORM, *UNIFORM)[0]),
    ]


def _time(fn, backend, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(backend)
        best = min(best, time.perf_counter() - t0)
    return best, np.asarray(out, dtype=float)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=_backend.get_threads())
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled kernels are not built; only the pure-Python timings are shown")
    print(f"{'case':<38} {'python s':>10} {'cython s':>10} {'speedup':>9} {'max |diff|':>11}")
    for name, fn in _cases(args.threads):
        tp, vp = _time(fn, _purepy, args.repeat)
        if compiled is None:
            print(f"{name:<38} {tp:10.4f} {'-':>10} {'-':>9} {'-':>11}")
            continue
        tc, vc = _time(fn, compiled, args.repeat)
        diff = float(np.max(np.abs(vp - vc)))
        print(f"{name:<38} {tp:10.4f} {tc:10.4f} {tp / tc:9.1f} {diff:11.2e}")


if __name__ == "__main__":
    main()
