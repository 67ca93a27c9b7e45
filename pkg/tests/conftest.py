import numpy as np
import pytest

from phaseflow.simulate import simulate_ar
from phaseflow.granger import ARModel
from phaseflow.spectra import SpectralConfig
from phaseflow.timeseries import EpochPlan, MultichannelRecord, epoch

RATE = 100.0

# strong one-way coupling: channel index 1 drives channel index 0
STRONG_AR1 = np.array([[[0.2, 1.2], [0.0, 0.8]]])


def delay_record(n_samples=60000, delay=5, seed=0, rate=RATE, scale2=1.0):
    """White-noise pair where channel 0 leads channel 1 by ``delay`` samples."""
    rng = np.random.default_rng(seed)
    w = rng.standard_normal(n_samples + delay)
    y1 = w[delay:]
    y2 = scale2 * w[: n_samples]
    return MultichannelRecord(data=np.vstack([y1, y2]), sampling_rate=rate)


def ar1_record(n_samples=2000, seed=0, rate=RATE):
    """Strong unidirectional AR(1) record (index 1 drives index 0)."""
    model = ARModel(coefficients=STRONG_AR1, residual_cov=np.eye(2))
    rng = np.random.default_rng(seed)
    data = simulate_ar(model, n_samples, rng, burn_in=200)
    return MultichannelRecord(data=data, sampling_rate=rate)


def default_setup(record, epoch_seconds=4.0, segment_seconds=2.0, overlap=0.5, demean=True):
    """Epoch a record with the protocol defaults; returns (epochs, config)."""
    plan = EpochPlan.from_seconds(record.sampling_rate, epoch_seconds, segment_seconds, overlap)
    config = SpectralConfig(
        segment_len=plan.segment_len, overlap_fraction=overlap, demean_segments=demean
    )
    return epoch(record, plan), config


@pytest.fixture
def small_epochs():
    """Five epochs of seeded two-channel data with the default plan."""
    return default_setup(delay_record(n_samples=2000, seed=3))
