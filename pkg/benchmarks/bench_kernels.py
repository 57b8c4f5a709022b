"""Time the compiled and numpy kernels on inputs sized like the simulator's.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5]

KDE: a 100-point window evaluated on a 128x128 grid.  SMO: one-class SVM
duals for a 100-point window.  Prints the best time per backend and the
speedup; outputs of both backends are checked for agreement first.
"""
import argparse
import timeit

import numpy as np

from edgemigrate._backend import available_backends
from edgemigrate.kde import _norm, select_bandwidth
from edgemigrate.ocsvm import heuristic_sigma, rbf_kernel


def kde_case(rng):
    pts = rng.normal(0.5, 0.1, (100, 2))
    H = select_bandwidth(pts)
    g = np.linspace(0, 1, 128)
    queries = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2)
    return (pts, queries, *H.inverse(), _norm(len(pts), H))


def smo_case(rng, nu=0.8):
    pts = rng.normal(0.5, 0.1, (100, 2))
    K = rbf_kernel(pts, pts, heuristic_sigma(pts))
    return (K, 1.0 / (nu * len(pts)), 1e-6, 100_000)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = available_backends()
    rng = np.random.default_rng(0)
    cases = {"kde_eval": kde_case(rng), "smo_solve": smo_case(rng)}
    if "cython" not in backends:
        print("compiled extension not built; timing the numpy kernels only")
    for name, case in cases.items():
        outs = {b: getattr(k, name)(*case) for b, k in backends.items()}
        if len(outs) == 2:
            a, c = outs["python"], outs["cython"]
            a, c = (a, c) if name == "kde_eval" else (a[0], c[0])
            assert np.allclose(a, c, rtol=1e-12, atol=1e-15), f"{name} backends disagree"
        times = {}
        for b, k in backends.items():
            fn = getattr(k, name)
            n = 3 if b == "python" and name == "smo_solve" else 10
            times[b] = min(timeit.repeat(lambda: fn(*case), number=n,
                                         repeat=args.repeat)) / n
        line = "  ".join(f"{b} {1e3 * t:8.3f} ms" for b, t in times.items())
        if len(times) == 2:
            line += f"  speedup x{times['python'] / times['cython']:.1f}"
        print(f"{name:10s} {line}")


if __name__ == "__main__":
    main()
