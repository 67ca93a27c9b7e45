"""Granger causality baseline on multichannel autoregressive models.

Models z(t) = sum_p A(p) z(t-p) + xi(t) are fitted by the multichannel
Levinson-Wiggins-Robinson recursion on lagged covariances estimated within
epochs (lags never cross an epoch boundary).  Directed influence from
channel a to channel b is ln(var_reduced / var_full) for channel b's
residual, with the reduced model fitted on channel b alone by the same
recursion.  Narrow-band values decompose the fitted model's spectral matrix
via its transfer function and integrate over the band.  Estimates are
normalized by the same leave-one-epoch-out jackknife as the phase-slope
statistics.

Orientation convention: ``GrangerEstimate.raw[i, j]`` is the net flux *into*
channel i from channel j (flux j->i minus flux i->j); a positive entry means
channel j drives channel i.  Note this is the transpose of the phase-slope
orientation, where a positive [i, j] means i drives j; the CLI re-orients
both to a common "i drives j" CSV column.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from phaseflow.psi import Band
from phaseflow.timeseries import EpochedData

__all__ = [
    "ARFitError",
    "ARModel",
    "GrangerEstimate",
    "companion_matrix",
    "epoch_lag_products",
    "fit_lwr",
    "granger_wide",
    "granger_narrow",
    "ar_transfer",
    "ar_spectral_matrix",
]


class ARFitError(ValueError):
    """AR fitting failed: singular covariance or non-contractive recursion."""


@dataclass
class ARModel:
    """AR coefficients A(1..P) stacked as (P, n, n) plus residual covariance."""

    coefficients: np.ndarray
    residual_cov: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        self.residual_cov = np.asarray(self.residual_cov, dtype=float)
        if self.coefficients.ndim != 3 or self.coefficients.shape[1] != self.coefficients.shape[2]:
            raise ValueError("coefficients must be (order, n, n)")
        n = self.coefficients.shape[1]
        if self.residual_cov.shape != (n, n):
            raise ValueError("residual_cov shape does not match coefficients")
        if np.max(np.abs(self.residual_cov - self.residual_cov.T)) > 1e-12:
            raise ValueError("residual_cov must be symmetric")
        if np.linalg.eigvalsh(self.residual_cov).min() < -1e-10:
            raise ValueError("residual_cov must be positive semidefinite")

    @property
    def order(self) -> int:
        return self.coefficients.shape[0]

    @property
    def n_channels(self) -> int:
        return self.coefficients.shape[1]


@dataclass
class GrangerEstimate:
    """Antisymmetric net-flux differences with jackknife normalization.

    ``raw[i, j]`` = flux j->i minus flux i->j (see module docstring);
    ``band`` is None for the wide-band (time-domain) variant.
    """

    raw: np.ndarray
    std: np.ndarray
    normalized: np.ndarray
    band: Band | None
    n_epochs: int
    loo: np.ndarray

    @property
    def degenerate(self) -> np.ndarray:
        return self.std == 0.0


def companion_matrix(coefficients: np.ndarray) -> np.ndarray:
    """(P*n, P*n) companion form; the model is stable iff all its
    eigenvalues lie strictly inside the unit circle."""
    coefficients = np.asarray(coefficients, dtype=float)
    P, n, _ = coefficients.shape
    comp = np.zeros((P * n, P * n))
    comp[:n, :] = np.concatenate(list(coefficients), axis=1)
    if P > 1:
        comp[n:, :-n] = np.eye((P - 1) * n)
    return comp


def epoch_lag_products(epochs: EpochedData, max_lag: int) -> np.ndarray:
    """Per-epoch sums of lagged outer products, shape (K, max_lag+1, n, n).

    Each epoch is demeaned before accumulation; the entry at lag l is
    sum_t z(t) z(t-l)^T over the epoch's valid t.  Dividing a sum of these
    by (n_epochs_used * epoch_len) gives the biased covariance estimate whose
    block-Toeplitz form is positive semidefinite.
    """
    L = epochs.plan.epoch_len
    if max_lag >= L:
        raise ARFitError(f"order {max_lag} needs epochs longer than {L} samples")
    x = epochs.epochs - epochs.epochs.mean(axis=2, keepdims=True)
    K, n, _ = x.shape
    out = np.empty((K, max_lag + 1, n, n))
    for lag in range(max_lag + 1):
        out[:, lag] = np.einsum("kit,kjt->kij", x[:, :, lag:], x[:, :, : L - lag])
    return out


def _solve_right(M: np.ndarray, D: np.ndarray) -> np.ndarray:
    """X = D @ inv(M) for symmetric M, batched."""
    return np.swapaxes(np.linalg.solve(M, np.swapaxes(D, -1, -2)), -1, -2)


def _lwr_stack(R: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Levinson-Wiggins-Robinson recursion on stacked covariance sequences.

    Parameters
    ----------
    R : ndarray, shape (B, P+1, n, n)
        Lagged covariances R(0..P) for B independent problems, with
        R(-l) = R(l)^T implied.

    Returns
    -------
    coefficients : ndarray, shape (B, P, n, n)
    residual_cov : ndarray, shape (B, n, n)

    Raises
    ------
    ARFitError
        On a singular covariance or a reflection matrix of spectral radius
        >= 1 (the recursion stops contracting, i.e. the sequence is not a
        valid covariance sequence numerically).
    """
    B, P1, n, _ = R.shape
    P = P1 - 1
    A = np.zeros((B, P, n, n))
    Bw = np.zeros((B, P, n, n))  # backward-predictor coefficients
    sigma_f = R[:, 0].copy()
    sigma_b = R[:, 0].copy()
    for m in range(1, P + 1):
        delta = R[:, m].copy()
        for k in range(1, m):
            delta -= A[:, k - 1] @ R[:, m - k]
        try:
            Kf = _solve_right(sigma_b, delta)                      # delta Σb⁻¹
            Kb = np.swapaxes(np.linalg.solve(sigma_f, delta), -1, -2)  # δᵀ Σf⁻¹
        except np.linalg.LinAlgError as exc:
            raise ARFitError(f"singular covariance at recursion order {m}: {exc}") from exc
        radius = np.abs(np.linalg.eigvals(Kf @ Kb)).max()
        if not radius < 1.0:
            raise ARFitError(
                f"reflection spectral radius {np.sqrt(radius):.6g} >= 1 at order {m}; "
                "data covariance is numerically degenerate"
            )
        A_prev = A[:, : m - 1].copy()
        B_prev = Bw[:, : m - 1].copy()
        A[:, m - 1] = Kf
        Bw[:, m - 1] = Kb
        for k in range(1, m):
            A[:, k - 1] = A_prev[:, k - 1] - Kf @ B_prev[:, m - k - 1]
            Bw[:, k - 1] = B_prev[:, k - 1] - Kb @ A_prev[:, m - k - 1]
        sigma_f_new = sigma_f - Kf @ sigma_b @ np.swapaxes(Kf, -1, -2)
        sigma_b_new = sigma_b - Kb @ sigma_f @ np.swapaxes(Kb, -1, -2)
        sigma_f, sigma_b = sigma_f_new, sigma_b_new
    return A, sigma_f


def _loo_and_full_cov(U: np.ndarray, epoch_len: int) -> np.ndarray:
    """Stack [full, loo_1..loo_K] covariance sequences from per-epoch sums.

    Leave-one-out sequences are re-summed over the remaining epochs so each
    equals a from-scratch estimate on those epochs bit for bit.
    """
    K = U.shape[0]
    stack = np.empty((K + 1,) + U.shape[1:])
    stack[0] = np.sum(U, axis=0) / (K * epoch_len)
    mask = np.ones(K, dtype=bool)
    for k in range(K):
        mask[k] = False
        stack[k + 1] = np.sum(U[mask], axis=0) / ((K - 1) * epoch_len)
        mask[k] = True
    return stack


def fit_lwr(epochs: EpochedData, order: int) -> ARModel:
    """Fit an AR model of the given order to epoched data.

    Warns (without failing) when the total sample count looks too small for
    the parameter count (fewer than ``10 * order * n_channels`` samples).
    """
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    K, n, L = epochs.epochs.shape
    if K * L <= 10 * order * n:
        warnings.warn(
            f"only {K * L} samples for an order-{order}, {n}-channel model; "
            "coefficient estimates may be unreliable",
            stacklevel=2,
        )
    U = epoch_lag_products(epochs, order)
    R = (np.sum(U, axis=0) / (K * L))[None]
    A, sigma = _lwr_stack(R)
    return ARModel(coefficients=A[0], residual_cov=sigma[0])


def _pair_flux_stack(U: np.ndarray, epoch_len: int, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
    """Wide-band flux i->j and j->i for the full fit and every leave-one-out fit.

    Returns two (K+1,) arrays (index 0 = full sample).  flux a->b is
    ln(reduced var of b without a's past / full bivariate var of b).
    """
    pair = U[:, :, [i, j]][:, :, :, [i, j]]
    stack = _loo_and_full_cov(pair, epoch_len)
    _, sigma_full = _lwr_stack(stack)
    _, sigma_i = _lwr_stack(stack[:, :, :1, :1])
    _, sigma_j = _lwr_stack(stack[:, :, 1:, 1:])
    flux_ij = np.log(sigma_j[:, 0, 0] / sigma_full[:, 1, 1])
    flux_ji = np.log(sigma_i[:, 0, 0] / sigma_full[:, 0, 0])
    return flux_ij, flux_ji


def _jackknifed_estimate(
    raw_stack: np.ndarray, band: Band | None, n_epochs: int
) -> GrangerEstimate:
    raw = raw_stack[0]
    loo = raw_stack[1:]
    std = np.sqrt(n_epochs) * np.std(loo, axis=0, ddof=1)
    normalized = np.where(std > 0, raw / np.where(std > 0, std, 1.0), 0.0)
    return GrangerEstimate(
        raw=raw, std=std, normalized=normalized, band=band, n_epochs=n_epochs, loo=loo
    )


def granger_wide(epochs: EpochedData, order: int = 10) -> GrangerEstimate:
    """Wide-band (time-domain) Granger flux differences, jackknifed over epochs.

    Channels are evaluated pairwise (bivariate full model against the
    univariate reduced model of each member, all fitted by the same
    recursion on the same covariance sums).
    """
    K, n, L = epochs.epochs.shape
    U = epoch_lag_products(epochs, order)
    raw_stack = np.zeros((K + 1, n, n))
    for i in range(n):
        for j in range(i + 1, n):
            flux_ij, flux_ji = _pair_flux_stack(U, L, i, j)
            raw_stack[:, i, j] = flux_ji - flux_ij
            raw_stack[:, j, i] = flux_ij - flux_ji
    return _jackknifed_estimate(raw_stack, None, K)


def ar_transfer(
    coefficients: np.ndarray, frequencies: np.ndarray, sampling_rate: float
) -> np.ndarray:
    """Transfer function H(f) = (I - sum_p A(p) e^{-i 2 pi f p / rate})^-1.

    ``coefficients`` may be (P, n, n) or a batched (B, P, n, n); the result
    gains a frequency axis before the matrix axes.
    """
    coefficients = np.asarray(coefficients, dtype=float)
    batched = coefficients.ndim == 4
    coefs = coefficients if batched else coefficients[None]
    P, n = coefs.shape[1], coefs.shape[2]
    phases = np.exp(
        -2j * np.pi * np.outer(np.arange(1, P + 1), frequencies) / sampling_rate
    )  # (P, F)
    Abar = np.eye(n) - np.einsum("bpij,pf->bfij", coefs, phases)
    try:
        H = np.linalg.inv(Abar)
    except np.linalg.LinAlgError as exc:
        raise ARFitError(f"transfer function singular inside the band: {exc}") from exc
    return H if batched else H[0]


def ar_spectral_matrix(model: ARModel, frequencies: np.ndarray, sampling_rate: float) -> np.ndarray:
    """Model spectral matrix H(f) Sigma H(f)^H on the given frequencies."""
    H = ar_transfer(model.coefficients, np.asarray(frequencies, dtype=float), sampling_rate)
    return H @ model.residual_cov @ np.conj(np.swapaxes(H, -1, -2))


def _spectral_flux_pair(
    A: np.ndarray, sigma: np.ndarray, frequencies: np.ndarray, sampling_rate: float
) -> tuple[np.ndarray, np.ndarray]:
    """Band-averaged spectral flux 0->1 and 1->0 for batched bivariate models.

    Uses the innovation-orthogonalized transfer function: the flux into
    channel a from its partner b is ln(S_aa / (|H~_aa|^2 sigma_aa)) with
    H~_aa = H_aa + (sigma_ab / sigma_aa) H_ab, averaged over the band grid.
    """
    H = ar_transfer(A, frequencies, sampling_rate)  # (B, F, 2, 2)
    S = H @ sigma[:, None] @ np.conj(np.swapaxes(H, -1, -2))
    s_aa = sigma[:, 0, 0][:, None]
    s_bb = sigma[:, 1, 1][:, None]
    s_ab = sigma[:, 0, 1][:, None]
    Ht00 = H[..., 0, 0] + (s_ab / s_aa) * H[..., 0, 1]
    Ht11 = H[..., 1, 1] + (s_ab / s_bb) * H[..., 1, 0]
    into_0 = np.log(S[..., 0, 0].real / (np.abs(Ht00) ** 2 * s_aa)).mean(axis=1)
    into_1 = np.log(S[..., 1, 1].real / (np.abs(Ht11) ** 2 * s_bb)).mean(axis=1)
    return into_1, into_0  # flux 0->1, flux 1->0


def granger_narrow(
    epochs: EpochedData,
    order: int,
    band: Band,
    freq_resolution: float = 0.5,
) -> GrangerEstimate:
    """Frequency-domain Granger flux differences integrated over a band.

    The full bivariate model per pair (and per leave-one-out fit) is
    decomposed through its transfer function; the directed spectral flux is
    averaged over the band on a ``freq_resolution`` grid and differenced
    exactly like the wide-band variant.
    """
    nyquist = epochs.sampling_rate / 2.0
    if band.f_min < 0.0 or band.f_max > nyquist + 1e-9:
        raise ValueError(f"band [{band.f_min}, {band.f_max}] exceeds [0, {nyquist}]")
    grid = np.arange(0.0, nyquist + freq_resolution / 2.0, freq_resolution)
    freqs = grid[(grid >= band.f_min - 1e-9) & (grid <= band.f_max + 1e-9)]
    if freqs.size < 2:
        raise ValueError(f"band [{band.f_min}, {band.f_max}] covers fewer than two grid points")
    K, n, L = epochs.epochs.shape
    U = epoch_lag_products(epochs, order)
    raw_stack = np.zeros((K + 1, n, n))
    for i in range(n):
        for j in range(i + 1, n):
            pair = U[:, :, [i, j]][:, :, :, [i, j]]
            stack = _loo_and_full_cov(pair, L)
            A, sigma = _lwr_stack(stack)
            flux_ij, flux_ji = _spectral_flux_pair(A, sigma, freqs, epochs.sampling_rate)
            raw_stack[:, i, j] = flux_ji - flux_ij
            raw_stack[:, j, i] = flux_ij - flux_ji
    return _jackknifed_estimate(raw_stack, band, K)
