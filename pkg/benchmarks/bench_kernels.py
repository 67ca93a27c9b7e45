#!/usr/bin/env python3
"""Time the compiled AR-simulation kernel against the pure-python fallback.

Runs the benchmark-sized workload (order-5, 2-channel, 60000 samples plus
burn-in) through both implementations and reports the speedup.  The compiled
backend is optional; results are identical up to floating-point association.
"""

import time

import numpy as np

from phaseflow import _core_py, kernels


def time_call(fn, *args, repeats=3):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    from phaseflow.simulate import random_stable_ar

    rng = np.random.default_rng(0)
    coefs = random_stable_ar(2, 5, "unidirectional-2to1", rng).coefficients
    innov = rng.standard_normal((61000, 2))

    print(f"active backend: {kernels.backend()}")
    t_py = time_call(_core_py.ar_simulate, coefs, innov, 1000)
    print(f"python fallback : {t_py * 1e3:8.1f} ms")
    if kernels.backend() == "compiled":
        from phaseflow import _core

        t_c = time_call(_core.ar_simulate, coefs, innov, 1000)
        print(f"compiled kernel : {t_c * 1e3:8.1f} ms")
        print(f"speedup         : {t_py / t_c:8.1f}x")
        fast = _core.ar_simulate(coefs, innov, 1000)
        slow = _core_py.ar_simulate(coefs, innov, 1000)
        print(f"max |diff|      : {np.abs(fast - slow).max():.3e}")
    else:
        print("compiled kernel : not built (install with Cython to compare)")


if __name__ == "__main__":
    main()
