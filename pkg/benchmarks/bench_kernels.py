"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints one line per kernel with the best-of-``repeat`` time of each backend,
the speed-up, and the largest relative difference between their outputs.
"""
import argparse
import timeit

import numpy as np

from fracsys import _core_py

try:
    from fracsys import _core
except ImportError:
    _core = None


def cases():
    t, w = np.polynomial.legendre.leggauss(32)
    t, w = 0.5 * (t + 1.0), 0.5 * w
    rho = np.linspace(0.01, 5.0, 4000)
    rng = np.random.default_rng(0)
    a = rng.uniform(0.0, 1.0, 200_000)
    b = rng.uniform(0.0, 3.0, 200_000)
    y = rng.uniform(-3.0, 3.0, 200_000)
    return {
        "sphere_kernel": lambda m: m.sphere_kernel(1.0, rho, 0.25, 3.5, 3, t, w, 2 * np.pi),
        "hat_weights": lambda m: m.hat_weights(0.3, 200_000),
        "f_values": lambda m: m.f_values(a, b, y, 0.5),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if _core is None:
        print("compiled extension not built; only the numpy fallback is available")
        return
    print(f"{'kernel':<14} {'numpy [ms]':>11} {'cython [ms]':>12} {'speed-up':>9} {'max rel diff':>13}")
    for name, call in cases().items():
        tp = min(timeit.repeat(lambda: call(_core_py), number=1, repeat=args.repeat))
        tc = min(timeit.repeat(lambda: call(_core), number=1, repeat=args.repeat))
        ref, got = call(_core_py), call(_core)
        diff = float(np.max(np.abs(got - ref) / np.maximum(np.abs(ref), 1e-300)))
        print(f"{name:<14} {1e3 * tp:11.3f} {1e3 * tc:12.3f} {tp / tc:9.2f} {diff:13.2e}")


if __name__ == "__main__":
    main()
