"""Time each kernel under the numba and the pure-numpy implementation.

    python benchmarks/bench_kernels.py [--repeat 5] [--quick]

The first numba call per signature compiles (or loads from cache); it is
timed separately as ``first`` and excluded from the steady-state median.
"""

import argparse
import time

import numpy as np

from smoothltf import kernels
from smoothltf.regression import MonomialBasis


def cases(quick):
    rng = np.random.default_rng(0)
    n = 8 if quick else 10
    m = 2000 if quick else 20000
    X = rng.choice([-1.0, 1.0], size=(m, n))
    w = rng.standard_normal(n)
    table = np.sign(rng.standard_normal(1 << n))
    p = rng.uniform(0.1, 0.9, n)
    basis = MonomialBasis(n, 3)
    Xl = rng.choice([-1.0, 1.0], size=(5000, n))
    y = rng.choice([-1, 1], size=m)
    big = 16 if quick else 20
    return {
        "ltf_signs": lambda impl: impl.ltf_signs(X, w, 0.3, 1e-12),
        "product_law": lambda impl: impl.product_law(rng.uniform(0, 1, big)),
        "noise_transform": lambda impl: impl.noise_transform(rng.standard_normal(1 << big), 0.7,
                                                             np.full(big, 0.3)),
        "subset_sums": lambda impl: impl.subset_sums(rng.standard_normal(big)),
        "pair_disagreement": lambda impl: impl.pair_disagreement(table, p, 0.9),
        "flip_error_rates": lambda impl: impl.flip_error_rates(X[:2000] * w, 0.3, y[:2000], 0.1, 1e-12),
        "monomial_features": lambda impl: impl.monomial_features(Xl, basis.parent, basis.var),
    }


def bench(fn, impl, repeat):
    t0 = time.perf_counter()
    fn(impl)
    first = time.perf_counter() - t0
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(impl)
        times.append(time.perf_counter() - t0)
    return first, float(np.median(times))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="smaller problem sizes")
    args = ap.parse_args(argv)
    if kernels.numba_impl is None:
        raise SystemExit("numba is not importable; nothing to compare")
    print(f"{'kernel':<20} {'numpy [s]':>11} {'numba [s]':>11} {'first numba':>12} {'speedup':>8}")
    for name, fn in cases(args.quick).items():
        _, t_np = bench(fn, kernels.numpy_impl, args.repeat)
        first, t_nb = bench(fn, kernels.numba_impl, args.repeat)
        print(f"{name:<20} {t_np:>11.5f} {t_nb:>11.5f} {first:>12.5f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
