"""Directed information-flow estimation for multichannel time series.

Estimates the direction of interaction between channels from the slope of
the cross-spectral phase (phase slope index), normalized by a
leave-one-epoch-out jackknife; provides a Granger-causality baseline on
multichannel AR models; simulates coupled systems with controllable noise
mixing and benchmarks both methods' detection rates; and aggregates pairwise
flow into per-channel net flux and spatial-direction projections for sensor
arrays.
"""

from phaseflow.granger import ARFitError, ARModel, GrangerEstimate, fit_lwr, granger_narrow, granger_wide
from phaseflow.psi import (
    Band,
    NetFlux,
    PsiEstimate,
    SensorLayout,
    band_sweep,
    default_layout,
    jackknife_psi,
    load_layout,
    net_flux,
    project_direction,
    psi_raw,
    significant,
)
from phaseflow.simulate import (
    BenchmarkResult,
    GeneratedSystem,
    SystemSpec,
    generate,
    is_stable,
    narrow_band_for,
    random_stable_ar,
    run_benchmark,
)
from phaseflow.spectra import (
    Coherency,
    CrossSpectrum,
    DegenerateSpectrumError,
    SpectralConfig,
    coherency,
    cross_spectrum,
    dft,
    hanning_window,
)
from phaseflow.timeseries import (
    DataError,
    EpochPlan,
    EpochedData,
    MultichannelRecord,
    epoch,
    load_record,
    save_record,
    segments_of,
)

__version__ = "0.1.0"
