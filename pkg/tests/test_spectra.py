import numpy as np
import pytest

from conftest import default_setup, delay_record

from phaseflow.spectra import (
    Coherency,
    CrossSpectrum,
    DegenerateSpectrumError,
    SpectralConfig,
    coherency,
    cross_spectrum,
    dft,
    epoch_cross_sums,
    hanning_window,
)
from phaseflow.timeseries import EpochedData, EpochPlan, MultichannelRecord, epoch


def naive_dft(x):
    """O(n^2) reference transform: X[m] = sum_t x[t] exp(-i 2 pi m t / n)."""
    n = len(x)
    m = np.arange(n // 2 + 1)
    t = np.arange(n)
    return (x[None, :] * np.exp(-2j * np.pi * m[:, None] * t[None, :] / n)).sum(axis=1)


class TestHanning:
    def test_small_values(self):
        np.testing.assert_allclose(hanning_window(3), [0.0, 1.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(hanning_window(4), [0.0, 0.75, 0.75, 0.0], atol=1e-15)

    @pytest.mark.parametrize("n", [2, 5, 16, 201])
    def test_symmetry(self, n):
        w = hanning_window(n)
        np.testing.assert_array_equal(w, w[::-1])

    def test_too_short(self):
        with pytest.raises(ValueError):
            hanning_window(1)


class TestDft:
    def test_constant(self):
        X = dft(np.full(10, 3.0))
        assert X[0] == pytest.approx(30.0)
        np.testing.assert_allclose(X[1:], 0.0, atol=1e-12)

    def test_single_tone(self):
        n = 8
        X = dft(np.cos(2 * np.pi * np.arange(n) / n))
        assert X[1] == pytest.approx(4.0)
        others = np.delete(X, 1)
        np.testing.assert_allclose(others, 0.0, atol=1e-12)

    @pytest.mark.parametrize("n", list(range(2, 65)))
    def test_matches_naive_oracle(self, n):
        rng = np.random.default_rng(n)
        x = rng.standard_normal(n)
        expected = naive_dft(x)
        got = dft(x)
        np.testing.assert_allclose(got, expected, rtol=1e-10, atol=1e-10 * np.abs(expected).max())


class TestCrossSpectrum:
    def test_identical_channels(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(4000)
        rec = MultichannelRecord(data=np.vstack([x, x]), sampling_rate=100.0)
        eps, cfg = default_setup(rec)
        cs = cross_spectrum(eps, cfg)
        np.testing.assert_allclose(cs.matrices[:, 0, 1], cs.matrices[:, 0, 0], rtol=1e-12)
        np.testing.assert_allclose(np.angle(cs.matrices[1:, 0, 1]), 0.0, atol=1e-12)

    def test_delay_phase_slope(self):
        # tau = 5 samples at 100 Hz = 0.05 s; arg S_12 must increase at 2*pi*tau
        rec = delay_record(n_samples=60000, delay=5, seed=2)
        eps, cfg = default_setup(rec)
        cs = cross_spectrum(eps, cfg)
        phase = np.unwrap(np.angle(cs.matrices[1:-1, 0, 1]))
        freqs = cs.frequencies[1:-1]
        slope = np.polyfit(freqs, phase, 1)[0]
        assert slope / (2 * np.pi) == pytest.approx(0.05, rel=0.02)

    def test_independent_channels_low_coherence(self):
        rng = np.random.default_rng(7)
        rec = MultichannelRecord(data=rng.standard_normal((2, 41600)), sampling_rate=100.0)
        eps, cfg = default_setup(rec)
        cs = cross_spectrum(eps, cfg)
        assert cs.n_segments >= 300
        coh = coherency(cs)
        assert np.abs(coh.matrices[:, 0, 1]).max() < 0.2

    def test_hermitian(self, small_epochs):
        eps, cfg = small_epochs
        cs = cross_spectrum(eps, cfg)
        np.testing.assert_allclose(
            cs.matrices, np.conj(np.swapaxes(cs.matrices, -1, -2)), atol=1e-12
        )
        assert (np.diagonal(cs.matrices, axis1=-2, axis2=-1).real >= 0).all()
        assert np.abs(np.diagonal(cs.matrices, axis1=-2, axis2=-1).imag).max() == 0.0

    def test_parseval(self, small_epochs):
        # mean windowed-segment energy equals the one-sided spectral mass
        eps, cfg = small_epochs
        freqs, sums, m = epoch_cross_sums(eps, cfg)
        S = np.sum(sums, axis=0) / (eps.n_epochs * m)
        n_seg_len = cfg.segment_len
        auto = np.diagonal(S, axis1=-2, axis2=-1).real  # (F, n)
        weights = np.full(len(freqs), 2.0)
        weights[0] = 1.0
        if n_seg_len % 2 == 0:
            weights[-1] = 1.0
        spectral_mass = (weights[:, None] * auto).sum(axis=0) / n_seg_len

        from phaseflow.spectra import hanning_window
        from phaseflow.timeseries import segment_starts

        starts = segment_starts(eps.plan.epoch_len, cfg.segment_len, cfg.hop)
        w = hanning_window(cfg.segment_len)
        energies = []
        for k in range(eps.n_epochs):
            for s in starts:
                seg = eps.epochs[k, :, s : s + cfg.segment_len]
                seg = seg - seg.mean(axis=-1, keepdims=True)
                energies.append(((w * seg) ** 2).sum(axis=-1))
        np.testing.assert_allclose(np.mean(energies, axis=0), spectral_mass, rtol=1e-6)

    def test_epoch_reorder_invariance(self, small_epochs):
        eps, cfg = small_epochs
        cs = cross_spectrum(eps, cfg)
        perm = np.array([3, 1, 4, 0, 2])
        shuffled = EpochedData(
            epochs=eps.epochs[perm], plan=eps.plan, sampling_rate=eps.sampling_rate
        )
        cs2 = cross_spectrum(shuffled, cfg)
        np.testing.assert_allclose(cs2.matrices, cs.matrices, rtol=1e-12, atol=1e-15)

    def test_segment_longer_than_epoch(self, small_epochs):
        eps, _ = small_epochs
        with pytest.raises(ValueError, match="exceeds"):
            cross_spectrum(eps, SpectralConfig(segment_len=2 * eps.plan.epoch_len))

    def test_global_scale_cancels_in_coherency(self, small_epochs):
        # no window-power normalization is applied; coherency divides any
        # global factor out, so scaling the data must not move C at all
        eps, cfg = small_epochs
        base = coherency(cross_spectrum(eps, cfg))
        scaled = EpochedData(
            epochs=eps.epochs * 7.5, plan=eps.plan, sampling_rate=eps.sampling_rate
        )
        other = coherency(cross_spectrum(scaled, cfg))
        np.testing.assert_allclose(other.matrices, base.matrices, rtol=1e-12, atol=1e-13)


class TestCoherency:
    def test_unit_diagonal_and_identical_channels(self):
        rng = np.random.default_rng(3)
        x = rng.standard_normal(4000)
        rec = MultichannelRecord(data=np.vstack([x, x]), sampling_rate=100.0)
        eps, cfg = default_setup(rec)
        coh = coherency(cross_spectrum(eps, cfg))
        np.testing.assert_allclose(coh.matrices[:, 0, 0], 1.0, atol=1e-12)
        np.testing.assert_allclose(coh.matrices[:, 1, 1], 1.0, atol=1e-12)
        np.testing.assert_allclose(coh.matrices[:, 0, 1], 1.0, atol=1e-9)

    def test_magnitude_bound(self, small_epochs):
        eps, cfg = small_epochs
        coh = coherency(cross_spectrum(eps, cfg))
        assert np.abs(coh.matrices).max() <= 1.0 + 1e-9
        np.testing.assert_allclose(
            coh.matrices, np.conj(np.swapaxes(coh.matrices, -1, -2)), atol=1e-12
        )

    def test_zero_channel_degenerate(self):
        rng = np.random.default_rng(4)
        data = np.vstack([rng.standard_normal(2000), np.zeros(2000)])
        rec = MultichannelRecord(data=data, sampling_rate=100.0)
        eps, cfg = default_setup(rec)
        with pytest.raises(DegenerateSpectrumError, match="channel 1"):
            coherency(cross_spectrum(eps, cfg))


def test_json_roundtrip(small_epochs):
    eps, cfg = small_epochs
    cs = cross_spectrum(eps, cfg)
    back = CrossSpectrum.from_json_dict(cs.to_json_dict())
    np.testing.assert_array_equal(back.frequencies, cs.frequencies)
    np.testing.assert_array_equal(back.matrices, cs.matrices)
    assert back.n_segments == cs.n_segments
    coh = coherency(cs)
    back_c = Coherency.from_json_dict(coh.to_json_dict())
    np.testing.assert_array_equal(back_c.matrices, coh.matrices)


def test_frequency_grid(small_epochs):
    eps, cfg = small_epochs
    cs = cross_spectrum(eps, cfg)
    assert cfg.frequency_resolution(100.0) == pytest.approx(0.5)
    assert cs.frequencies[0] == 0.0
    assert cs.frequencies[-1] == pytest.approx(50.0)
    np.testing.assert_allclose(np.diff(cs.frequencies), 0.5)
