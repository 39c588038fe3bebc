"""Time the digit kernels under the numba and numpy backends.

Usage::

    python benchmarks/bench_kernels.py [--n 200000] [--repeat 5]

Each kernel is run once per backend to warm up (numba compiles on first
call), then timed ``repeat`` times; the best time is reported.  Outputs of
the two backends are also compared for bit-identity.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from qmcdep import kernels
from qmcdep.numth import digit_budget


def _cases(n: int, base: int):
    rng = np.random.default_rng(0)
    K = digit_budget(base)
    m = np.arange(n, dtype=np.uint64)
    y = kernels.radical_inverse(m, base, K)
    table = np.array([rng.permutation(base) for _ in range(K)], dtype=np.int64)
    mat = np.tril(rng.integers(0, base, (K, K)))
    np.fill_diagonal(mat, 1)
    x = rng.random(n)
    key = rng.integers(0, n // 4, n).astype(np.uint64)
    return {
        "radical_inverse": (m, base, K),
        "digit_map": (y, base, K, table),
        "digit_matvec": (y, base, K, mat),
        "owen": (y, base, K, 12345),
        "rebase": (x, base**K),
        "count_pairs": (key, n // 4),
    }


def _best(fn, args, impl, repeat):
    out = fn(*args, impl=impl)
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args, impl=impl)
        best = min(best, time.perf_counter() - t)
    return best, out


def main(argv=None) -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--n", type=int, default=200_000)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--bases", default="2,5,53")
    args = p.parse_args(argv)
    if not kernels.USE_NUMBA:
        print("numba backend disabled (QMCDEP_DISABLE_NUMBA); timing numpy only")
    print(f"{'kernel':16s} {'base':>5s} {'numba ms':>10s} {'numpy ms':>10s} {'speedup':>8s}  identical")
    for base in (int(b) for b in args.bases.split(",")):
        for name, case in _cases(args.n, base).items():
            fn = getattr(kernels, name)
            t_np, out_np = _best(fn, case, "numpy", args.repeat)
            if kernels.USE_NUMBA:
                t_nb, out_nb = _best(fn, case, "numba", args.repeat)
                same = np.array_equal(np.asarray(out_nb), np.asarray(out_np))
                print(f"{name:16s} {base:5d} {t_nb * 1e3:10.2f} {t_np * 1e3:10.2f} {t_np / t_nb:8.1f}  {same}")
            else:
                print(f"{name:16s} {base:5d} {'-':>10s} {t_np * 1e3:10.2f} {'-':>8s}  -")


if __name__ == "__main__":
    main()
