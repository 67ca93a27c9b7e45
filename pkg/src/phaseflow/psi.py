"""Phase slope index: band-summed phase-slope estimation with jackknife
normalization, net per-channel flux, and projection onto spatial directions.

The raw statistic for a channel pair is

    psi_raw[i, j] = Im( sum_{f in F} conj(C_ij(f)) * C_ij(f + df) )

summed over the band's frequency grid F; it is positive when channel i leads
channel j.  The normalized statistic divides by a leave-one-epoch-out
jackknife standard deviation (sqrt(K) times the sample standard deviation of
the K leave-one-out values); absolute normalized values above 2 are treated
as significant by default.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from phaseflow.spectra import (
    SpectralConfig,
    Coherency,
    coherency_matrices,
    epoch_cross_sums,
)
from phaseflow.timeseries import EpochedData

__all__ = [
    "Band",
    "PsiEstimate",
    "NetFlux",
    "SensorLayout",
    "psi_raw",
    "psi_weighted_slope",
    "jackknife_psi",
    "significant",
    "net_flux",
    "project_direction",
    "band_sweep",
    "load_layout",
    "default_layout",
]

_GRID_TOL = 1e-6


@dataclass(frozen=True)
class Band:
    """A frequency band [f_min, f_max] in Hz, aligned to a spectral grid.

    The summed set F contains every grid frequency f with f >= f_min and
    f + df <= f_max, so the band's top bin contributes only as the right
    neighbor of the bin below it.
    """

    f_min: float
    f_max: float

    def __post_init__(self):
        if not self.f_min < self.f_max:
            raise ValueError(f"need f_min < f_max, got [{self.f_min}, {self.f_max}]")

    @property
    def center(self) -> float:
        return 0.5 * (self.f_min + self.f_max)

    def indices_on(self, frequencies: np.ndarray) -> np.ndarray:
        """Indices of F on a uniform grid; the right neighbor is index + 1."""
        df = frequencies[1] - frequencies[0]
        for edge in (self.f_min, self.f_max):
            if abs(edge / df - round(edge / df)) > _GRID_TOL:
                raise ValueError(
                    f"band edge {edge} Hz is off the {df} Hz frequency grid"
                )
        if self.f_min < frequencies[0] - _GRID_TOL * df or self.f_max > frequencies[-1] + _GRID_TOL * df:
            raise ValueError(
                f"band [{self.f_min}, {self.f_max}] exceeds the grid "
                f"[{frequencies[0]}, {frequencies[-1]}]"
            )
        tol = _GRID_TOL * df
        mask = (frequencies >= self.f_min - tol) & (frequencies + df <= self.f_max + tol)
        idx = np.nonzero(mask)[0]
        if idx.size < 1:
            raise ValueError(
                f"band [{self.f_min}, {self.f_max}] is narrower than two grid bins"
            )
        return idx


@dataclass
class PsiEstimate:
    """Raw, jackknife-std and normalized phase-slope matrices for one band.

    ``raw`` is antisymmetric with zero diagonal; ``normalized`` is
    ``raw / std`` where ``std > 0`` and 0 at degenerate entries.  ``loo``
    holds the K leave-one-epoch-out raw matrices that back the jackknife,
    kept so that row-sum statistics (net flux) can be jackknifed on the
    summed quantity itself.
    """

    raw: np.ndarray
    std: np.ndarray
    normalized: np.ndarray
    band: Band
    n_epochs: int
    loo: np.ndarray

    @property
    def degenerate(self) -> np.ndarray:
        """True where the jackknife std was exactly zero (off-diagonal duplicates)."""
        return self.std == 0.0

    def to_json_dict(self) -> dict:
        return {
            "raw": self.raw.tolist(),
            "std": self.std.tolist(),
            "normalized": self.normalized.tolist(),
            "band": {"f_min": self.band.f_min, "f_max": self.band.f_max},
            "n_epochs": int(self.n_epochs),
        }


@dataclass
class NetFlux:
    """Jackknife-normalized row sums of raw PSI: positive marks a net driver."""

    values: np.ndarray
    raw_sums: np.ndarray
    std: np.ndarray
    degenerate: np.ndarray


def psi_raw(coh: Coherency, band: Band) -> np.ndarray:
    """Raw phase-slope matrix over a band; antisymmetric, zero diagonal."""
    idx = band.indices_on(coh.frequencies)
    return _psi_from_stack(coh.matrices, idx)


def _psi_from_stack(C: np.ndarray, idx: np.ndarray) -> np.ndarray:
    """Band sum of Im(conj(C(f)) C(f+df)) for stacked coherency (..., F, n, n)."""
    term = np.conj(C[..., idx, :, :]) * C[..., idx + 1, :, :]
    return np.sum(term, axis=-3).imag


def psi_weighted_slope(coh: Coherency, band: Band) -> np.ndarray:
    """Equivalent weighted-phase-slope form of `psi_raw`.

    Computes sum_f |C(f)| * |C(f+df)| * sin(phase(f+df) - phase(f)).  This is
    algebraically identical to `psi_raw` (Im(conj(a) b) = |a||b| sin(arg b -
    arg a)) and exists as a cross-check, not a user-facing code path.
    """
    idx = band.indices_on(coh.frequencies)
    C1 = coh.matrices[idx]
    C2 = coh.matrices[idx + 1]
    weights = np.abs(C1) * np.abs(C2)
    return np.sum(weights * np.sin(np.angle(C2) - np.angle(C1)), axis=0)


class _JackknifeContext:
    """Full-sample and leave-one-epoch-out coherency stacks for one dataset.

    Leave-one-out cross-spectra are re-summed over the remaining epochs (not
    computed by subtracting one epoch from the total) so each one is
    bit-identical to a from-scratch estimate on those K-1 epochs.
    """

    def __init__(self, frequencies: np.ndarray, sums: np.ndarray, segments_per_epoch: int):
        K = sums.shape[0]
        if K < 2:
            raise ValueError(f"jackknife needs at least 2 epochs, got {K}")
        self.frequencies = frequencies
        self.n_epochs = K
        full = np.sum(sums, axis=0) / (K * segments_per_epoch)
        loo = np.empty_like(sums)
        mask = np.ones(K, dtype=bool)
        for k in range(K):
            mask[k] = False
            loo[k] = np.sum(sums[mask], axis=0) / ((K - 1) * segments_per_epoch)
            mask[k] = True
        self.C_full = coherency_matrices(full, frequencies)
        self.C_loo = coherency_matrices(loo, frequencies)

    @classmethod
    def from_epochs(cls, epochs: EpochedData, config: SpectralConfig) -> "_JackknifeContext":
        freqs, sums, m = epoch_cross_sums(epochs, config)
        return cls(freqs, sums, m)

    def estimate(self, band: Band) -> PsiEstimate:
        idx = band.indices_on(self.frequencies)
        raw = _psi_from_stack(self.C_full, idx)
        loo = _psi_from_stack(self.C_loo, idx)
        std = np.sqrt(self.n_epochs) * np.std(loo, axis=0, ddof=1)
        with np.errstate(invalid="ignore", divide="ignore"):
            normalized = np.where(std > 0, raw / np.where(std > 0, std, 1.0), 0.0)
        return PsiEstimate(
            raw=raw,
            std=std,
            normalized=normalized,
            band=band,
            n_epochs=self.n_epochs,
            loo=loo,
        )


def jackknife_psi(epochs: EpochedData, config: SpectralConfig, band: Band) -> PsiEstimate:
    """Phase-slope estimate with leave-one-epoch-out jackknife normalization.

    The raw matrix uses all epochs; each leave-one-out value re-averages the
    segment cross products over the remaining epochs; ``std`` is sqrt(K)
    times the sample standard deviation of the K leave-one-out matrices.
    Entries with zero std get normalized value 0 and are flagged degenerate.
    """
    return _JackknifeContext.from_epochs(epochs, config).estimate(band)


def significant(psi: PsiEstimate, threshold: float = 2.0) -> np.ndarray:
    """Boolean matrix, true where |normalized| strictly exceeds the threshold."""
    return np.abs(psi.normalized) > threshold


def net_flux(psi: PsiEstimate) -> NetFlux:
    """Per-channel net flux: jackknifed row sums of the raw matrix.

    The row sum of raw PSI over partners is normalized by the jackknife std
    of the *summed* statistic (computed from the leave-one-out row sums), not
    by any combination of per-pair stds.
    """
    raw_sums = psi.raw.sum(axis=1)
    loo_sums = psi.loo.sum(axis=2)
    std = np.sqrt(psi.n_epochs) * np.std(loo_sums, axis=0, ddof=1)
    degenerate = std == 0.0
    values = np.where(degenerate, 0.0, raw_sums / np.where(degenerate, 1.0, std))
    return NetFlux(values=values, raw_sums=raw_sums, std=std, degenerate=degenerate)


@dataclass
class SensorLayout:
    """2-D sensor positions aligned with a record's channel order."""

    positions: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float)
        if self.positions.ndim != 2 or self.positions.shape[1] != 2:
            raise ValueError("positions must be an (n, 2) array")
        self.labels = tuple(self.labels)
        if len(self.labels) != self.positions.shape[0]:
            raise ValueError("labels and positions disagree in length")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("layout labels must be unique")
        diff = self.positions[None, :, :] - self.positions[:, None, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        np.fill_diagonal(dist, np.inf)
        if not (dist > 0).all():
            i, j = np.argwhere(dist == 0)[0]
            raise ValueError(f"sensors {self.labels[i]} and {self.labels[j]} share a position")

    def __len__(self) -> int:
        return self.positions.shape[0]


def project_direction(psi: PsiEstimate, layout: SensorLayout, u: np.ndarray) -> np.ndarray:
    """Contribution of each normalized pair value to spatial direction u.

    out[i, j] = normalized[i, j] * (u . (r_j - r_i) / |r_j - r_i|), diagonal
    zero.  u must be a unit 2-vector; with the bundled layout (front at +y),
    u = (0, -1) resolves front-to-back flow and u = (-1, 0) right-to-left.
    """
    n = psi.normalized.shape[0]
    if len(layout) != n:
        raise ValueError(f"layout has {len(layout)} sensors for {n} channels")
    u = np.asarray(u, dtype=float)
    if u.shape != (2,) or abs(np.hypot(u[0], u[1]) - 1.0) > 1e-9:
        raise ValueError("u must be a unit 2-vector")
    diff = layout.positions[None, :, :] - layout.positions[:, None, :]  # r_j - r_i at [i, j]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    np.fill_diagonal(dist, 1.0)
    out = psi.normalized * (diff @ u) / dist
    np.fill_diagonal(out, 0.0)
    return out


def band_sweep(
    epochs: EpochedData,
    config: SpectralConfig,
    band_width: float,
    centers: list[float],
) -> list[PsiEstimate]:
    """One jackknifed estimate per band of ``band_width`` Hz centered on each entry.

    Every centered band must fit inside (0, Nyquist] on the spectral grid and
    span at least two grid bins.  The jackknife std is recomputed per band.
    The segment spectra are computed once and shared across bands.
    """
    if len(centers) == 0:
        raise ValueError("no band centers given")
    df = config.frequency_resolution(epochs.sampling_rate)
    nyquist = (epochs.sampling_rate / 2.0)
    if band_width < 2 * df - _GRID_TOL * df:
        raise ValueError(f"band width {band_width} Hz needs at least two {df} Hz bins")
    bands = []
    for c in centers:
        band = Band(c - band_width / 2.0, c + band_width / 2.0)
        if band.f_min < df - _GRID_TOL * df or band.f_max > nyquist + _GRID_TOL * df:
            raise ValueError(
                f"band [{band.f_min}, {band.f_max}] around center {c} exceeds (0, {nyquist}]"
            )
        bands.append(band)
    ctx = _JackknifeContext.from_epochs(epochs, config)
    return [ctx.estimate(band) for band in bands]


def load_layout(path: str | Path) -> SensorLayout:
    """Read a ``label,x,y`` CSV sensor layout (optional header row)."""
    labels: list[str] = []
    coords: list[tuple[float, float]] = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"layout rows must be label,x,y; got {row!r}")
            try:
                x, y = float(row[1]), float(row[2])
            except ValueError:
                if not labels:  # header row
                    continue
                raise
            labels.append(row[0].strip())
            coords.append((x, y))
    if not labels:
        raise ValueError(f"no sensors found in layout file {path}")
    return SensorLayout(positions=np.asarray(coords), labels=tuple(labels))


def default_layout() -> SensorLayout:
    """The bundled 19-channel 10-20 schematic layout (unit-circle positions).

    Schematic plotting coordinates with the front of the head at +y; not
    measured electrode positions.  Any layout can be substituted via
    `load_layout`.
    """
    ref = resources.files("phaseflow").joinpath("data/layout_10_20.csv")
    with resources.as_file(ref) as path:
        return load_layout(path)
