"""
Tests for time-series synthesis and Welch PSD estimation.
"""

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.signal import welch

from optosense.analysis.synthesis import (
    MAX_SAMPLES,
    record_length,
    run_seed_batch,
    segment_length,
    spawn_seeds,
    synthesis_frequencies,
    synthesize_timeseries,
)
from optosense.analysis.welch import segment_count, welch_psd
from optosense.errors import DomainError
from optosense.models.parameters import Environment, MechanicalMode
from optosense.physics.mechanics import thermal_displacement_psd_values
from optosense.spectra.io import TimeSeries
from optosense.spectra.spectrum import NoiseSpectrum, integrate_psd


def flat_model(level):
    return lambda f: np.full(f.shape, level)


class TestRecordSizing:
    """Segment and record lengths for a requested resolution bandwidth."""

    def test_segment_length(self):
        assert segment_length(2e6, 20.0) == 150_000

    def test_record_length(self):
        assert record_length(2e6, 20.0, 300) == 22_575_000
        assert record_length(2e6, 20.0, 1) == 150_000

    def test_segment_count(self):
        assert segment_count(22_575_000, 150_000) == 300
        assert segment_count(149_999, 150_000) == 0

    def test_synthesis_frequencies_skip_dc_and_nyquist(self):
        np.testing.assert_allclose(synthesis_frequencies(1000.0, 10), [100.0, 200.0, 300.0, 400.0])
        odd = synthesis_frequencies(1000.0, 11)
        assert odd.size == 5
        assert odd[-1] < 500.0

    def test_invalid_inputs(self):
        with pytest.raises(DomainError):
            segment_length(1e3, 0.0)
        with pytest.raises(DomainError):
            segment_length(1e3, 500.0)
        with pytest.raises(DomainError):
            record_length(1e3, 1.0, 0)


class TestSynthesis:
    """Frequency-domain colouring of Gaussian noise."""

    def test_white_variance(self):
        fs, n, level = 1e3, 2**16, 2e-3
        series = synthesize_timeseries(flat_model(level), fs, n / fs, seed=11)
        assert len(series) == n
        assert series.samples.mean() == pytest.approx(0.0, abs=1e-12)
        expected = level * (n / 2 - 1) * fs / n
        assert np.var(series.samples) == pytest.approx(expected, rel=0.025)

    def test_seed_determinism(self):
        a = synthesize_timeseries(flat_model(1.0), 1e3, 4.0, seed=5)
        b = synthesize_timeseries(flat_model(1.0), 1e3, 4.0, seed=5)
        c = synthesize_timeseries(flat_model(1.0), 1e3, 4.0, seed=6)
        np.testing.assert_array_equal(a.samples, b.samples)
        assert not np.array_equal(a.samples, c.samples)
        assert a.seed == 5

    def test_zero_psd_gives_silence(self):
        series = synthesize_timeseries(flat_model(0.0), 1e3, 1.0, seed=0)
        np.testing.assert_array_equal(series.samples, 0.0)

    def test_spectrum_model_must_reach_nyquist(self):
        model = NoiseSpectrum([1.0, 100.0], [1.0, 1.0])
        with pytest.raises(DomainError):
            synthesize_timeseries(model, 1e3, 1.0, seed=0)

    def test_spectrum_model_covering_band(self):
        model = NoiseSpectrum([0.5, 600.0], [1e-3, 1e-3])
        series = synthesize_timeseries(model, 1e3, 1.0, seed=0)
        assert series.sample_rate == 1e3

    def test_negative_model_values(self):
        with pytest.raises(DomainError):
            synthesize_timeseries(lambda f: -np.ones(f.shape), 1e3, 1.0, seed=0)

    def test_record_limit(self):
        with pytest.raises(DomainError):
            synthesize_timeseries(flat_model(1.0), 1.0, MAX_SAMPLES + 10, seed=0)


class TestSeedBatch:
    """Reproducible multi-seed runs."""

    def test_spawned_seeds_are_stable(self):
        assert spawn_seeds(42, 4) == spawn_seeds(42, 4)
        assert len(set(spawn_seeds(42, 20))) == 20

    def test_results_do_not_depend_on_workers(self):
        def task(seed):
            return float(synthesize_timeseries(flat_model(1.0), 1e3, 2.0, seed).samples[10])

        assert run_seed_batch(task, 7, 6) == run_seed_batch(task, 7, 6, max_workers=3)


class TestWelch:
    """Averaged periodogram with a Hann window."""

    def test_white_noise_level(self):
        fs = 1e3
        rng = np.random.default_rng(1)
        n = record_length(fs, 1.5 * fs / 1000, 200)
        series = TimeSeries(rng.standard_normal(n), fs)
        psd = welch_psd(series, 1.5 * fs / 1000)
        assert psd.label == "welch"
        assert psd.f_min == pytest.approx(1.0)
        assert psd.resolution_bandwidth == pytest.approx(1.5)
        # Nyquist bin is not doubled
        assert psd.values[:-1].mean() == pytest.approx(2.0 / fs, rel=0.02)

    def test_tone_power(self):
        fs, rms = 1e3, 3e-12
        n = record_length(fs, 1.5, 20)
        t = np.arange(n) / fs
        series = TimeSeries(np.sqrt(2) * rms * np.sin(2 * np.pi * 100.0 * t + 0.3), fs)
        psd = welch_psd(series, 1.5)
        assert integrate_psd(psd, 90.0, 110.0) == pytest.approx(rms**2, rel=0.01)
        assert psd.frequencies[np.argmax(psd.values)] == pytest.approx(100.0)

    def test_blocks_match_single_welch(self):
        fs = 1e3
        rbw = 1.5 * fs / 256
        n = record_length(fs, rbw, 100)
        samples = np.random.default_rng(2).standard_normal(n)
        series = TimeSeries(samples, fs)
        _, reference = welch(
            samples, fs=fs, window="hann", nperseg=256, noverlap=128, detrend=False
        )
        serial = welch_psd(series, rbw)
        pooled = welch_psd(series, rbw, max_workers=3)
        np.testing.assert_allclose(serial.values, reference[1:], rtol=1e-10)
        np.testing.assert_array_equal(serial.values, pooled.values)

    def test_record_shorter_than_segment(self):
        with pytest.raises(DomainError):
            welch_psd(TimeSeries(np.ones(100), 1e3), 1.5)

    def test_synthesized_resonance_is_recovered(self):
        mode = MechanicalMode(
            label="m", resonance_frequency_hz=1e4, effective_mass_kg=1e-9, quality_factor=50
        )
        room = Environment(temperature_k=300.0)

        def model(f):
            return thermal_displacement_psd_values(mode, room, f)

        fs, rbw = 1e5, 30.0
        n = record_length(fs, rbw, 200)
        series = synthesize_timeseries(model, fs, n / fs, seed=3)
        psd = welch_psd(series, rbw)
        lo, hi = 1e4 - 5 * mode.linewidth_hz, 1e4 + 5 * mode.linewidth_hz
        f = np.linspace(lo, hi, 20001)
        expected = trapezoid(model(f), f)
        assert integrate_psd(psd, lo, hi) == pytest.approx(expected, rel=0.03)
