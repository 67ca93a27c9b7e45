"""Multichannel recordings and their decomposition into epochs and segments.

A recording is a channels-by-samples matrix at a fixed sampling rate.  For
spectral estimation it is cut into non-overlapping *epochs* (the resampling
unit of the jackknife) and each epoch into overlapping *segments* (the
averaging unit of the cross-spectrum).  Segments never cross epoch
boundaries.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "DataError",
    "MultichannelRecord",
    "EpochPlan",
    "EpochedData",
    "load_record",
    "save_record",
    "epoch",
    "segments_of",
]


class DataError(ValueError):
    """Malformed, inconsistent or non-finite input data."""


@dataclass
class MultichannelRecord:
    """A real-valued (n_channels, n_samples) recording at ``sampling_rate`` Hz.

    Values are treated as immutable after construction; no operation in this
    package mutates a record in place.
    """

    data: np.ndarray
    sampling_rate: float
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim != 2:
            raise DataError(f"record data must be 2-D (channels x samples), got ndim={self.data.ndim}")
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise DataError(f"record needs at least one channel and one sample, got shape {self.data.shape}")
        if not self.sampling_rate > 0:
            raise DataError(f"sampling_rate must be positive, got {self.sampling_rate}")
        if not np.isfinite(self.data).all():
            bad = np.argwhere(~np.isfinite(self.data))[0]
            raise DataError(f"non-finite value at channel {bad[0]}, sample {bad[1]}")
        if self.labels is not None:
            self.labels = tuple(str(lab) for lab in self.labels)
            if len(self.labels) != self.data.shape[0]:
                raise DataError(
                    f"{len(self.labels)} labels for {self.data.shape[0]} channels"
                )
            if len(set(self.labels)) != len(self.labels):
                raise DataError("channel labels must be unique")

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class EpochPlan:
    """Epoch/segment geometry, all lengths in samples.

    The segment hop is ``segment_len * (1 - overlap_fraction)`` and must be a
    positive whole number of samples.
    """

    epoch_len: int
    segment_len: int
    overlap_fraction: float = 0.5

    def __post_init__(self):
        if self.segment_len < 2:
            raise DataError(f"segment_len must be >= 2, got {self.segment_len}")
        if self.segment_len > self.epoch_len:
            raise DataError(
                f"segment_len {self.segment_len} exceeds epoch_len {self.epoch_len}"
            )
        if not 0.0 <= self.overlap_fraction < 1.0:
            raise DataError(f"overlap_fraction must be in [0, 1), got {self.overlap_fraction}")
        hop = self.segment_len * (1.0 - self.overlap_fraction)
        if abs(hop - round(hop)) > 1e-9 or round(hop) < 1:
            raise DataError(
                f"segment hop {hop} is not a positive integer number of samples"
            )

    @property
    def hop(self) -> int:
        return int(round(self.segment_len * (1.0 - self.overlap_fraction)))

    @classmethod
    def from_seconds(
        cls,
        sampling_rate: float,
        epoch_seconds: float = 4.0,
        segment_seconds: float = 2.0,
        overlap_fraction: float = 0.5,
    ) -> "EpochPlan":
        """Build a plan from durations; defaults are 4 s epochs, 2 s segments, 50% overlap."""
        epoch_len = int(round(epoch_seconds * sampling_rate))
        segment_len = int(round(segment_seconds * sampling_rate))
        return cls(epoch_len=epoch_len, segment_len=segment_len, overlap_fraction=overlap_fraction)


@dataclass
class EpochedData:
    """K equally shaped epochs stacked as a (K, n_channels, epoch_len) array."""

    epochs: np.ndarray
    plan: EpochPlan
    sampling_rate: float

    def __post_init__(self):
        self.epochs = np.asarray(self.epochs, dtype=float)
        if self.epochs.ndim != 3:
            raise DataError("epochs must be a (K, n_channels, epoch_len) array")
        if self.epochs.shape[0] < 2:
            raise DataError(
                f"jackknife needs at least 2 epochs, got {self.epochs.shape[0]}"
            )
        if self.epochs.shape[2] != self.plan.epoch_len:
            raise DataError(
                f"epoch length {self.epochs.shape[2]} does not match plan ({self.plan.epoch_len})"
            )

    @property
    def n_epochs(self) -> int:
        return self.epochs.shape[0]

    @property
    def n_channels(self) -> int:
        return self.epochs.shape[1]


def load_record(
    path: str | Path,
    format: str = "csv",
    sampling_rate: float = 1.0,
    n_channels: int | None = None,
) -> MultichannelRecord:
    """Read a recording from disk.

    Parameters
    ----------
    path : str or Path
        Input file.
    format : {"csv", "raw"}
        ``csv``: one sample per row, one channel per column, comma separated,
        with an optional header row supplying channel labels.  ``raw``:
        header-less little-endian float64, channel-major; requires
        ``n_channels``.
    sampling_rate : float
        Sampling rate in Hz (not stored in either file format).
    n_channels : int, optional
        Channel count for the raw format.

    Raises
    ------
    DataError
        Ragged rows, unparseable cells, non-finite values, or a byte count
        that does not divide evenly into channels.
    """
    path = Path(path)
    if format == "csv":
        data, labels = _read_csv(path)
        return MultichannelRecord(data=data, sampling_rate=sampling_rate, labels=labels)
    if format == "raw":
        if n_channels is None or n_channels < 1:
            raise DataError("raw format requires a positive n_channels")
        buf = path.read_bytes()
        if len(buf) == 0:
            raise DataError(f"{path}: empty file")
        if len(buf) % (8 * n_channels) != 0:
            raise DataError(
                f"{path}: {len(buf)} bytes is not a whole number of float64 frames for {n_channels} channels"
            )
        flat = np.frombuffer(buf, dtype="<f8")
        data = flat.reshape(n_channels, -1).astype(float)
        return MultichannelRecord(data=data, sampling_rate=sampling_rate)
    raise DataError(f"unknown format {format!r} (expected 'csv' or 'raw')")


def _read_csv(path: Path) -> tuple[np.ndarray, tuple[str, ...] | None]:
    with open(path, newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise DataError(f"{path}: empty file")

    labels: tuple[str, ...] | None = None
    first = rows[0]
    try:
        [float(cell) for cell in first]
    except ValueError:
        labels = tuple(cell.strip() for cell in first)
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: header but no data rows")

    n_cols = len(rows[0])
    values = np.empty((len(rows), n_cols), dtype=float)
    for i, row in enumerate(rows):
        if len(row) != n_cols:
            raise DataError(f"{path}: row {i} has {len(row)} cells, expected {n_cols}")
        try:
            values[i] = [float(cell) for cell in row]
        except ValueError as exc:
            raise DataError(f"{path}: row {i}: {exc}") from exc
    # rows are samples, columns are channels
    return values.T, labels


def save_record(record: MultichannelRecord, path: str | Path, format: str = "csv") -> None:
    """Write a record to disk in ``csv`` or ``raw`` format (see `load_record`)."""
    path = Path(path)
    if format == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            if record.labels is not None:
                writer.writerow(record.labels)
            for sample in record.data.T:
                writer.writerow([repr(float(v)) for v in sample])
        return
    if format == "raw":
        path.write_bytes(np.ascontiguousarray(record.data, dtype="<f8").tobytes())
        return
    raise DataError(f"unknown format {format!r} (expected 'csv' or 'raw')")


def epoch(record: MultichannelRecord, plan: EpochPlan) -> EpochedData:
    """Cut a record into K = floor(n_samples / epoch_len) consecutive epochs.

    Trailing samples that do not fill a complete epoch are discarded.  Fewer
    than two complete epochs is an error (the jackknife needs K >= 2).
    """
    K = record.n_samples // plan.epoch_len
    if K < 2:
        raise DataError(
            f"{record.n_samples} samples yield only {K} complete epochs of {plan.epoch_len}; need >= 2"
        )
    used = record.data[:, : K * plan.epoch_len]
    epochs = used.reshape(record.n_channels, K, plan.epoch_len).transpose(1, 0, 2).copy()
    return EpochedData(epochs=epochs, plan=plan, sampling_rate=record.sampling_rate)


def segment_starts(epoch_len: int, segment_len: int, hop: int) -> np.ndarray:
    """Start offsets of all segments that fit entirely inside one epoch."""
    return np.arange(0, epoch_len - segment_len + 1, hop)


def segments_of(epoch_matrix: np.ndarray, plan: EpochPlan) -> list[np.ndarray]:
    """All (n_channels, segment_len) segments of one epoch at the plan's hop."""
    epoch_matrix = np.asarray(epoch_matrix, dtype=float)
    if epoch_matrix.ndim != 2 or epoch_matrix.shape[1] != plan.epoch_len:
        raise DataError(
            f"epoch has width {epoch_matrix.shape[-1]}, plan expects {plan.epoch_len}"
        )
    starts = segment_starts(plan.epoch_len, plan.segment_len, plan.hop)
    return [epoch_matrix[:, s : s + plan.segment_len] for s in starts]
