"""Windowed Fourier analysis and cross-spectral estimation.

The cross-spectrum ``S_ij(f)`` is estimated as the average over all segments
(across all epochs) of ``X_i(f) * conj(X_j(f))``, where ``X`` is the discrete
Fourier transform of the (optionally demeaned) Hanning-windowed segment.  With
this orientation a pure delay ``y2(t) = y1(t - tau)``, ``tau > 0``, gives
``arg S_12(f) = 2*pi*f*tau``, i.e. a phase that increases with frequency when
channel 1 leads.

No window-power normalization is applied: coherency and everything derived
from it divide out any global window factor, a cancellation covered by the
test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from phaseflow.timeseries import EpochedData, segment_starts

__all__ = [
    "DegenerateSpectrumError",
    "SpectralConfig",
    "CrossSpectrum",
    "Coherency",
    "hanning_window",
    "dft",
    "epoch_cross_sums",
    "cross_spectrum",
    "coherency",
]


class DegenerateSpectrumError(ValueError):
    """An auto-spectrum is zero at a frequency where coherency is needed."""


@dataclass(frozen=True)
class SpectralConfig:
    """Segment geometry and windowing for cross-spectral estimation.

    The frequency resolution is ``sampling_rate / segment_len``; the paper
    defaults (2 s segments at 100 Hz) give 0.5 Hz.  ``demean_segments``
    removes each segment's per-channel mean before windowing (default on, to
    keep DC leakage out of the low-frequency coherency; switchable so both
    behaviors are testable).
    """

    segment_len: int
    window: str = "hanning"
    overlap_fraction: float = 0.5
    demean_segments: bool = True

    def __post_init__(self):
        if self.segment_len < 2:
            raise ValueError(f"segment_len must be >= 2, got {self.segment_len}")
        if self.window != "hanning":
            raise ValueError(f"unsupported window {self.window!r}")
        if not 0.0 <= self.overlap_fraction < 1.0:
            raise ValueError(f"overlap_fraction must be in [0, 1), got {self.overlap_fraction}")
        hop = self.segment_len * (1.0 - self.overlap_fraction)
        if abs(hop - round(hop)) > 1e-9 or round(hop) < 1:
            raise ValueError(f"segment hop {hop} is not a positive integer")

    @property
    def hop(self) -> int:
        return int(round(self.segment_len * (1.0 - self.overlap_fraction)))

    def frequency_resolution(self, sampling_rate: float) -> float:
        return sampling_rate / self.segment_len


@dataclass
class CrossSpectrum:
    """Per-frequency Hermitian matrices S(f) on a one-sided frequency grid.

    ``matrices`` has shape (n_freqs, n_channels, n_channels); ``n_segments``
    is the number of segments averaged.
    """

    frequencies: np.ndarray
    matrices: np.ndarray
    n_segments: int

    def to_json_dict(self) -> dict:
        return _spectral_json(self.frequencies, self.matrices) | {"n_segments": int(self.n_segments)}

    @classmethod
    def from_json_dict(cls, doc: dict) -> "CrossSpectrum":
        freqs, mats = _spectral_from_json(doc)
        return cls(frequencies=freqs, matrices=mats, n_segments=int(doc["n_segments"]))


@dataclass
class Coherency:
    """Complex coherency C(f) = S_ij / sqrt(S_ii * S_jj), same layout as CrossSpectrum."""

    frequencies: np.ndarray
    matrices: np.ndarray

    def to_json_dict(self) -> dict:
        return _spectral_json(self.frequencies, self.matrices)

    @classmethod
    def from_json_dict(cls, doc: dict) -> "Coherency":
        freqs, mats = _spectral_from_json(doc)
        return cls(frequencies=freqs, matrices=mats)


def _spectral_json(frequencies: np.ndarray, matrices: np.ndarray) -> dict:
    return {
        "frequencies": [float(f) for f in frequencies],
        "matrices": [
            [[[float(v.real), float(v.imag)] for v in row] for row in mat]
            for mat in matrices
        ],
    }


def _spectral_from_json(doc: dict) -> tuple[np.ndarray, np.ndarray]:
    freqs = np.asarray(doc["frequencies"], dtype=float)
    raw = np.asarray(doc["matrices"], dtype=float)
    return freqs, raw[..., 0] + 1j * raw[..., 1]


def hanning_window(n: int) -> np.ndarray:
    """Symmetric Hanning weights w[k] = 0.5 * (1 - cos(2*pi*k/(n-1))), k = 0..n-1.

    The second half mirrors the first so the symmetry w[k] = w[n-1-k] holds
    exactly, not just to rounding.
    """
    if n < 2:
        raise ValueError(f"window length must be >= 2, got {n}")
    k = np.arange(n)
    w = 0.5 * (1.0 - np.cos(2.0 * np.pi * k / (n - 1)))
    half = n // 2
    w[n - half :] = w[:half][::-1]
    return w


def dft(segment: np.ndarray) -> np.ndarray:
    """One-sided DFT, X[m] = sum_t x[t] * exp(-i*2*pi*m*t/n) for m = 0..floor(n/2)."""
    segment = np.asarray(segment, dtype=float)
    if segment.ndim != 1 or segment.size < 2:
        raise ValueError("dft expects a 1-D real vector of length >= 2")
    return np.fft.rfft(segment)


def epoch_cross_sums(
    epochs: EpochedData, config: SpectralConfig
) -> tuple[np.ndarray, np.ndarray, int]:
    """Per-epoch sums of segment cross products.

    Returns ``(frequencies, sums, segments_per_epoch)`` where ``sums`` has
    shape (K, n_freqs, n_channels, n_channels) and ``sums[k]`` is the sum over
    the segments of epoch k of ``X_i(f) * conj(X_j(f))``.  This is the shared
    building block of `cross_spectrum` and the jackknife: leave-one-out
    estimates re-average exactly these per-epoch sums.
    """
    plan = epochs.plan
    if config.segment_len > plan.epoch_len:
        raise ValueError(
            f"segment_len {config.segment_len} exceeds epoch length {plan.epoch_len}"
        )
    starts = segment_starts(plan.epoch_len, config.segment_len, config.hop)
    if len(starts) == 0:
        raise ValueError("no complete segment fits in an epoch")

    idx = starts[:, None] + np.arange(config.segment_len)[None, :]
    # (K, n_ch, m, seg_len) -> (K, m, n_ch, seg_len)
    segs = epochs.epochs[:, :, idx].transpose(0, 2, 1, 3).copy()
    if config.demean_segments:
        segs -= segs.mean(axis=-1, keepdims=True)
    segs *= hanning_window(config.segment_len)

    X = np.fft.rfft(segs, axis=-1)  # (K, m, n_ch, n_freqs)
    sums = np.einsum("kmif,kmjf->kfij", X, np.conj(X))
    freqs = np.arange(X.shape[-1]) * config.frequency_resolution(epochs.sampling_rate)
    return freqs, sums, len(starts)


def cross_spectrum(epochs: EpochedData, config: SpectralConfig) -> CrossSpectrum:
    """Average the segment cross products over all segments of all epochs."""
    freqs, sums, m = epoch_cross_sums(epochs, config)
    n_segments = epochs.n_epochs * m
    matrices = np.sum(sums, axis=0) / n_segments
    return CrossSpectrum(frequencies=freqs, matrices=matrices, n_segments=n_segments)


def coherency_matrices(matrices: np.ndarray, frequencies: np.ndarray | None = None) -> np.ndarray:
    """Normalize stacked cross-spectral matrices to coherency.

    Accepts any shape (..., n_freqs, n, n); raises `DegenerateSpectrumError`
    if a diagonal entry is zero, naming the channel and frequency.
    """
    diag = np.diagonal(matrices, axis1=-2, axis2=-1).real
    if not (diag > 0).all():
        flat = np.argwhere(~(diag > 0))[0]
        where = (
            f"{frequencies[flat[-2]]} Hz" if frequencies is not None else f"frequency index {flat[-2]}"
        )
        raise DegenerateSpectrumError(
            f"zero auto-spectrum for channel {flat[-1]} at {where}"
        )
    denom = np.sqrt(diag[..., :, None] * diag[..., None, :])
    return matrices / denom


def coherency(cs: CrossSpectrum) -> Coherency:
    """Complex coherency of a cross-spectrum; requires S_ii(f) > 0 everywhere."""
    return Coherency(
        frequencies=cs.frequencies,
        matrices=coherency_matrices(cs.matrices, cs.frequencies),
    )
