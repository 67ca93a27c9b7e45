"""Kernel dispatch: compiled extension when built, pure python otherwise.

``python -m phaseflow.kernels`` reports which backend is active;
``benchmarks/bench_kernels.py`` times the two implementations against each
other on a benchmark-sized simulation.
"""

from __future__ import annotations

import numpy as np

try:
    from phaseflow import _core

    _impl = _core
    BACKEND = "compiled"
except ImportError:  # extension not built; fall back to python kernels
    from phaseflow import _core_py

    _impl = _core_py
    BACKEND = "python"

__all__ = ["BACKEND", "backend", "ar_simulate"]


def backend() -> str:
    """Name of the active kernel backend, ``"compiled"`` or ``"python"``."""
    return BACKEND


def ar_simulate(coefficients: np.ndarray, innovations: np.ndarray, burn_in: int = 0) -> np.ndarray:
    """Run the AR(P) recursion z(t) = sum_p A(p) z(t-p) + xi(t).

    ``coefficients``: (P, n, n); ``innovations``: (T, n); returns the
    trajectory with the first ``burn_in`` steps dropped, shape
    (T - burn_in, n).
    """
    coefficients = np.ascontiguousarray(coefficients, dtype=float)
    innovations = np.ascontiguousarray(innovations, dtype=float)
    if coefficients.ndim != 3 or coefficients.shape[1] != coefficients.shape[2]:
        raise ValueError("coefficients must be (P, n, n)")
    if innovations.ndim != 2 or innovations.shape[1] != coefficients.shape[1]:
        raise ValueError("innovations must be (T, n) with n matching coefficients")
    if not 0 <= burn_in <= innovations.shape[0]:
        raise ValueError(f"burn_in {burn_in} outside [0, {innovations.shape[0]}]")
    return _impl.ar_simulate(coefficients, innovations, burn_in)


if __name__ == "__main__":
    print(f"phaseflow kernel backend: {BACKEND}")
