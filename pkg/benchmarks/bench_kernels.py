"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-``repeat`` wall time for each kernel and backend and the
speed-up. Both backends are imported directly, so no environment variable
is needed.
"""
import argparse
import timeit

import numpy as np

from cvarkit import _pykernels

try:
    from cvarkit import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    n, p = 5, 2
    coefs = 0.3 * rng.standard_normal((p, n, n)) / n
    intercept = rng.standard_normal(n)
    init = rng.standard_normal((p, n))
    yield "simulate_var single path T=20000", "simulate_var", (
        intercept, coefs, rng.standard_normal((1, 20000, n)), init)
    yield "simulate_var batch B=999 T=500", "simulate_var", (
        intercept, coefs, rng.standard_normal((999, 500, n)), init)
    yield "ma_coefficients H=500", "ma_coefficients", (coefs, 500)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'case':38s} {'numpy [ms]':>11s} {'cython [ms]':>12s} {'speed-up':>9s}")
    for label, name, call_args in cases(rng):
        py = min(timeit.repeat(lambda: getattr(_pykernels, name)(*call_args),
                               number=1, repeat=args.repeat))
        if _ckernels is None:
            print(f"{label:38s} {py * 1e3:11.2f} {'n/a':>12s} {'n/a':>9s}")
            continue
        cy = min(timeit.repeat(lambda: getattr(_ckernels, name)(*call_args),
                               number=1, repeat=args.repeat))
        ref = getattr(_pykernels, name)(*call_args)
        out = getattr(_ckernels, name)(*call_args)
        assert np.allclose(ref, out, rtol=1e-10, atol=1e-10), label
        print(f"{label:38s} {py * 1e3:11.2f} {cy * 1e3:12.2f} {py / cy:8.1f}x")


if __name__ == "__main__":
    main()
