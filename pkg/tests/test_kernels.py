import numpy as np
import pytest

from phaseflow import _core_py, kernels


def test_backend_reported():
    assert kernels.backend() in ("compiled", "python")


def test_ar1_closed_form():
    # single impulse through AR(1): z[t] = a**t
    coefs = np.array([[[0.5]]])
    innov = np.zeros((10, 1))
    innov[0, 0] = 1.0
    out = kernels.ar_simulate(coefs, innov)
    np.testing.assert_allclose(out[:, 0], 0.5 ** np.arange(10), rtol=1e-14)


def test_burn_in_semantics():
    coefs = np.array([[[0.5]]])
    rng = np.random.default_rng(0)
    innov = rng.standard_normal((100, 1))
    full = kernels.ar_simulate(coefs, innov, burn_in=0)
    cut = kernels.ar_simulate(coefs, innov, burn_in=25)
    np.testing.assert_array_equal(cut, full[25:])


def test_early_lags_treated_as_zero():
    # first steps only see the innovations that exist
    coefs = np.array([[[0.0, 1.0], [0.0, 0.0]]])  # channel 0 copies channel 1's past
    innov = np.array([[0.0, 1.0], [0.0, 0.0], [0.0, 0.0]])
    out = kernels.ar_simulate(coefs, innov)
    np.testing.assert_array_equal(out[:, 0], [0.0, 1.0, 0.0])


def test_input_validation():
    with pytest.raises(ValueError, match="coefficients"):
        kernels.ar_simulate(np.zeros((2, 2)), np.zeros((5, 2)))
    with pytest.raises(ValueError, match="innovations"):
        kernels.ar_simulate(np.zeros((1, 2, 2)), np.zeros((5, 3)))
    with pytest.raises(ValueError, match="burn_in"):
        kernels.ar_simulate(np.zeros((1, 2, 2)), np.zeros((5, 2)), burn_in=9)


@pytest.mark.skipif(kernels.backend() != "compiled", reason="extension not built")
def test_compiled_matches_python_fallback():
    rng = np.random.default_rng(1)
    for n, P, T in [(1, 1, 500), (2, 5, 2000), (4, 3, 800)]:
        coefs = 0.3 * rng.standard_normal((P, n, n))
        innov = rng.standard_normal((T, n))
        fast = kernels.ar_simulate(coefs, innov, burn_in=10)
        slow = _core_py.ar_simulate(coefs, innov, burn_in=10)
        np.testing.assert_allclose(fast, slow, rtol=1e-9, atol=1e-12)
