"""Pure-python fallback kernels, used when the compiled extension is absent.

Semantics match ``phaseflow._core`` exactly; only speed differs (the
time-stepping recursion is the one loop in the package that cannot be
vectorized, because every step depends on the previous outputs).
"""

from __future__ import annotations

import numpy as np


def ar_simulate(coefficients: np.ndarray, innovations: np.ndarray, burn_in: int = 0) -> np.ndarray:
    """Drive z(t) = sum_p A(p) z(t-p) + xi(t) and drop the first ``burn_in`` steps.

    ``coefficients`` is (P, n, n), ``innovations`` is (T, n); returns
    (T - burn_in, n).  Terms with t - p < 0 are treated as zero.
    """
    P = coefficients.shape[0]
    T = innovations.shape[0]
    z = np.zeros_like(innovations)
    for t in range(T):
        acc = innovations[t].copy()
        for p in range(1, min(P, t) + 1):
            acc += coefficients[p - 1] @ z[t - p]
        z[t] = acc
    return z[burn_in:].copy()
