"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--M 3000] [--repeat 3]

Each kernel sees the same ensemble and inputs; the script checks the two
backends agree before timing them.
"""

import argparse
import time

import numpy as np

from nmunravel import kernels
from nmunravel.jumps import build_jump_family
from nmunravel.kde import bandwidth
from nmunravel.linalg import SIGMA_MINUS


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(M, rng):
    ens = 0.4 * (rng.normal(size=(M, 2)) + 1j * rng.normal(size=(M, 2))) + np.array([0.6, 0.4])
    inv_s2 = 1.0 / bandwidth(M, 2) ** 2
    fam = build_jump_family(SIGMA_MINUS, 0.5, 2)
    prop = np.array([[1.0, 1e-3j], [1e-3j, 0.999]])
    u = rng.uniform(size=M)
    dz = 0.02 * (rng.normal(size=M) + 1j * rng.normal(size=M))
    B = np.stack([prop, prop, prop])
    zs = rng.normal(size=(M, 3)) + 1j * rng.normal(size=(M, 3))
    radius = float(np.max(np.abs(ens)))
    anchors = np.arange(M)

    def run(kern, name):
        out = np.empty_like(ens)
        flags = np.empty(M, dtype=np.bool_)
        if name == "kde_logsum":
            return kern.kde_logsum(ens, ens, inv_s2)
        if name == "kde_mean_shift":
            return kern.kde_mean_shift(ens, ens, inv_s2)[0]
        if name == "jump_step (gated)":
            ev = np.empty(M, dtype=np.int64)
            kern.jump_step(ens, ens, radius, anchors, prop, fam.forward_ops, fam.inverse_ops,
                           np.full(4, 1e-4), np.full(4, 2e-6), inv_s2, u, out, ev, flags)
            return out
        if name == "diffusion_step":
            kern.diffusion_step(ens, ens, prop, SIGMA_MINUS, 0.01, 1e-3, inv_s2, dz, out, flags)
            return out
        kern.qsd_step(ens, B, SIGMA_MINUS, zs, 1e-3, out)
        return out

    return run, ["kde_logsum", "kde_mean_shift", "jump_step (gated)", "diffusion_step", "qsd_step"]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--M", type=int, default=3000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if kernels.numba_kernels is None:
        raise SystemExit("numba is disabled (NMUNRAVEL_DISABLE_NUMBA); nothing to compare")
    run, names = cases(args.M, np.random.default_rng(0))
    print(f"M = {args.M}, best of {args.repeat}")
    print(f"{'kernel':<20}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name in names:
        a = run(kernels.numba_kernels, name)  # also compiles
        b = run(kernels.numpy_kernels, name)
        assert np.allclose(a, b, rtol=1e-10, atol=1e-12), name
        tn = best_of(lambda: run(kernels.numba_kernels, name), args.repeat)
        tp = best_of(lambda: run(kernels.numpy_kernels, name), args.repeat)
        print(f"{name:<20}{1e3 * tn:>12.2f}{1e3 * tp:>12.2f}{tp / tn:>10.1f}")


if __name__ == "__main__":
    main()
