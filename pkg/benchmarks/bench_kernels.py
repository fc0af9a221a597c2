"""Time the stencil kernels: fused numba loops against the numpy fallback.

    python benchmarks/bench_kernels.py [--sizes 129,257,513] [--repeat 5]

Prints a table and checks that both paths agree to rounding. Run with
TWOPEAK_NO_NUMBA=1 to confirm that the library then never touches numba
(the numba column is skipped).
"""
import argparse
import timeit

import numpy as np

from twopeak import _accel, _kernels


def fields(n, ndim, rng):
    shape = (n,) * ndim
    u = rng.random(shape)
    v = rng.random(shape)
    for a in (u, v):
        for ax in range(ndim):
            idx = [slice(None)] * ndim
            idx[ax] = [0, -1]
            a[tuple(idx)] = 0.0
    J1 = 1.0 + rng.random(shape)
    J2 = np.ones(shape)
    return u, v, J1, J2, J1.copy(), J2.copy()


def args_for(name, u, v, J1, J2, K1, K2, rng):
    tail = (-1.0, 2.0, 0.1)
    if name == "hess":
        return (u, v, rng.random(u.shape), rng.random(u.shape), J1, J2, K1, K2) + tail
    return (u, v, J1, J2, K1, K2) + tail


def best(fn, args, repeat):
    fn(*args)  # warm up (and compile)
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="129,257,513")
    ap.add_argument("--sizes3", default="33,65")
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args()
    rng = np.random.default_rng(0)
    nb = _accel.USE_NUMBA
    print(f"numba enabled: {nb}")
    print(f"{'kernel':8s} {'N':>2s} {'nodes':>10s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s} {'max diff':>9s}")
    cases = [(2, int(n)) for n in a.sizes.split(",")] + [(3, int(n)) for n in a.sizes3.split(",")]
    for ndim, n in cases:
        base = fields(n, ndim, rng)
        for name in ("grad", "hess", "energy"):
            args = args_for(name, *base, rng)
            f_np = _kernels.kernel(name, ndim, use_numba=False)
            t_np = best(f_np, args, a.repeat)
            if not nb:
                print(f"{name:8s} {ndim:2d} {n ** ndim:10d} {1e3 * t_np:10.2f} {'-':>10s} {'-':>8s} {'-':>9s}")
                continue
            f_nb = _kernels.kernel(name, ndim, use_numba=True)
            t_nb = best(f_nb, args, a.repeat)
            r_np, r_nb = f_np(*args), f_nb(*args)
            diff = max(float(np.max(np.abs(np.asarray(x) - np.asarray(y))) / (1 + np.max(np.abs(x))))
                       for x, y in zip(r_np, r_nb))
            print(f"{name:8s} {ndim:2d} {n ** ndim:10d} {1e3 * t_np:10.2f} {1e3 * t_nb:10.2f} "
                  f"{t_np / t_nb:8.1f} {diff:9.1e}")


if __name__ == "__main__":
    main()
