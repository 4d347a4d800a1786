"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 3]

Each row reports the best wall time over ``--repeat`` runs and checks that
both backends return the same answer.
"""
import argparse
import time

import numpy as np

from apcsim import kernels
from apcsim.convex import Ball
from apcsim.presets import DISK_CENTERS, DISK_WEIGHTS

DISKS = tuple(Ball(c, 1) for c in DISK_CENTERS)


def _cases():
    packed = kernels.pack_bodies(DISKS)
    rng = np.random.default_rng(0)
    X0 = rng.uniform(-2, 2, size=(50, 2))
    yield "cyclic_projection_batch (50 pts, tol 1e-8)", (
        lambda impl: kernels.cyclic_projection_batch(*packed, X0, 1e-8, 200_000, impl=impl)[0])

    xs = np.linspace(-2, 2, 1001)
    yield "grid_feasible_mask (1001 x 1001)", (
        lambda impl: kernels.grid_feasible_mask(*packed, xs, xs, 1e-9, impl=impl))

    W = np.array(DISK_WEIGHTS)[None]
    alphas = np.full((2000, 3), 0.5)
    starts = np.repeat(rng.uniform(-2, 2, size=(100, 1, 2)), 3, axis=1)
    yield "blend_consensus_final (100 runs x 2000 steps)", (
        lambda impl: kernels.blend_consensus_final(*packed, W, alphas, starts, impl=impl))

    A = rng.normal(size=(5, 3))
    b = rng.uniform(0.1, 2, size=5)
    P = rng.normal(scale=3, size=(2000, 3))
    yield "dykstra_batch (2000 pts, 5 faces)", (
        lambda impl: kernels.dykstra_batch(A, b, P, 1e-12, 1e-9, 100_000, impl=impl)[0])


def _best(fn, impl, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(impl)
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not kernels.compiled_available():
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
    py, cc = kernels.backend("python"), kernels.backend("compiled")
    print(f"{'kernel':48} {'python':>10} {'compiled':>10} {'speedup':>8}  agree")
    for name, fn in _cases():
        tp, a = _best(fn, py, args.repeat)
        tc, b = _best(fn, cc, args.repeat)
        agree = np.allclose(np.asarray(a, float), np.asarray(b, float), atol=1e-10)
        print(f"{name:48} {tp:10.4f} {tc:10.4f} {tp / tc:8.1f}x  {agree}")


if __name__ == "__main__":
    main()
