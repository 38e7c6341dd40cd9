"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends are called explicitly through the backend= argument, so the
UKZB_KERNELS setting does not matter here.  Outputs are compared before timing.
"""
import argparse
import timeit

import numpy as np

from ukzb import _kernels as kn


def cases(rng):
    w0, q = 0.4 + 0.3j, 0.05 + 0.02j
    a = rng.normal(size=16) + 1j * rng.normal(size=16)
    b = rng.normal(size=16) + 1j * rng.normal(size=16)
    A = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
    B = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
    return {
        "lattice_sums s=-20..20 j<=8": lambda be: kn.lattice_sums(w0, q, -20, 20, 8, 1, backend=be),
        "jet_mul order 15": lambda be: kn.jet_mul(a, b, 15, backend=be),
        "jet2_mul order 8": lambda be: kn.jet2_mul(A, B, 8, backend=be),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=200)
    args = ap.parse_args()
    backends = ["numpy"] + (["numba"] if kn.BACKEND == "numba" else [])
    rng = np.random.default_rng(0)
    print("%-30s %14s %14s %8s" % ("kernel", "numpy [us]", "numba [us]", "speedup"))
    for name, fn in cases(rng).items():
        outs = {be: fn(be) for be in backends}  # also triggers JIT compilation
        if len(outs) == 2:
            assert np.allclose(outs["numpy"], outs["numba"], rtol=1e-10, atol=1e-12), name
        t = {be: min(timeit.repeat(lambda: fn(be), number=args.number, repeat=args.repeat)) / args.number * 1e6
             for be in backends}
        nb = t.get("numba")
        print("%-30s %14.2f %14s %8s" % (name, t["numpy"], "-" if nb is None else "%.2f" % nb,
                                          "-" if nb is None else "%.1fx" % (t["numpy"] / nb)))


if __name__ == "__main__":
    main()
