"""
Time the numba and numpy variants of every hot kernel on the same inputs.

    python benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0]

Each kernel is called once untimed (JIT compilation, caches) and then
``--repeat`` times; the best wall time is reported with the maximum
difference between the two backends' results.
"""
import argparse
import time

import numpy as np

from rieszlab import kernels
from rieszlab.poly import MonomialPoly, uniform_sphere
from rieszlab.rw import binomial_profile


def best_time(fn, args, repeat):
    fn(*args)
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(scale, rng):
    npts = int(200_000 * scale)
    z = uniform_sphere(npts, rng)
    f = (MonomialPoly.coordinate(0) + MonomialPoly.coordinate(1).conj() * 0.5) ** 6
    yield "eval_monomials", (z, f.exps, f.coeffs)

    m = int(4096 * scale)
    grid = 1 + 0.8 * np.cos(3 * 2 * np.pi * np.arange(m) / m)
    yield "grid_pair_energy", (grid, 0.5)

    pts = rng.random((int(5000 * scale), 2)) * 2 * np.pi
    yield "pair_count", (pts, np.geomspace(1e-3, 3.0, 32), 2 * np.pi)

    c = binomial_profile(12)
    th = rng.random(int(1_000_000 * scale)) * np.pi / 2
    ph = rng.random(th.shape[0]) * 2 * np.pi
    yield "rw_abs2", (c, th, ph)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[1])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0)
    args = ap.parse_args()
    if "numba" not in kernels.BACKENDS:
        raise SystemExit("numba is not importable; nothing to compare")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}{'max |diff|':>14}")
    for name, inputs in cases(args.scale, rng):
        t_np, r_np = best_time(kernels.BACKENDS["numpy"][name], inputs, args.repeat)
        t_nb, r_nb = best_time(kernels.BACKENDS["numba"][name], inputs, args.repeat)
        diff = float(np.max(np.abs(np.asarray(r_np) - np.asarray(r_nb))))
        print(f"{name:<18}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>10.1f}{diff:>14.3e}")


if __name__ == "__main__":
    main()
