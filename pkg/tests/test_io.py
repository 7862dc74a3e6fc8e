"""
Tests for spectrum CSV, time-series and manifest files.
"""

import hashlib

import numpy as np
import pytest

from optosense.errors import DomainError, UnitMismatchError
from optosense.spectra.io import (
    TimeSeries,
    read_spectrum_csv,
    read_timeseries_binary,
    write_manifest,
    write_spectrum_csv,
    write_timeseries_binary,
)
from optosense.spectra.spectrum import NoiseSpectrum, SpectrumUnit


class TestSpectrumCsv:
    """Two-column spectrum files with a unit header."""

    def test_written_spectrum_reads_back(self, tmp_path):
        f = np.logspace(3, 7, 41)
        spectrum = NoiseSpectrum(f, 1e8 / f**2 + 1e-5, SpectrumUnit.FREQUENCY, label="laser")
        path = write_spectrum_csv(spectrum, tmp_path / "laser.csv")
        loaded = read_spectrum_csv(path, SpectrumUnit.FREQUENCY)
        assert loaded.unit == SpectrumUnit.FREQUENCY
        assert loaded.label == "laser"
        np.testing.assert_allclose(loaded.frequencies, spectrum.frequencies, rtol=1e-14)
        np.testing.assert_allclose(loaded.values, spectrum.values, rtol=1e-14)

    def test_header_format(self, tmp_path):
        spectrum = NoiseSpectrum([1.0, 2.0], [3.0, 4.0])
        path = write_spectrum_csv(spectrum, tmp_path / "s.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == "# unit=m2/Hz sidedness=one"
        assert lines[1] == "frequency_hz,value"

    def test_unit_mismatch(self, tmp_path):
        path = write_spectrum_csv(NoiseSpectrum([1.0, 2.0], [3.0, 4.0]), tmp_path / "s.csv")
        with pytest.raises(UnitMismatchError):
            read_spectrum_csv(path, SpectrumUnit.FREQUENCY)

    def test_two_sided_rejected(self, tmp_path):
        path = tmp_path / "two.csv"
        path.write_text("# unit=m2/Hz sidedness=two\nfrequency_hz,value\n1,1\n2,1\n")
        with pytest.raises(DomainError):
            read_spectrum_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            read_spectrum_csv(tmp_path / "absent.csv")


class TestTimeSeries:
    """Binary record format."""

    def test_binary_round_trip(self, tmp_path):
        series = TimeSeries(np.random.default_rng(3).standard_normal(1000), 2e6, seed=3)
        path = write_timeseries_binary(series, tmp_path / "x.bin")
        loaded = read_timeseries_binary(path)
        np.testing.assert_array_equal(loaded.samples, series.samples)
        assert loaded.sample_rate == 2e6
        assert loaded.seed == 3
        assert loaded.duration == pytest.approx(5e-4)

    def test_truncated_payload(self, tmp_path):
        path = write_timeseries_binary(TimeSeries(np.ones(10), 1.0), tmp_path / "x.bin")
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(DomainError):
            read_timeseries_binary(path)

    def test_rejects_bad_rate(self):
        with pytest.raises(DomainError):
            TimeSeries(np.ones(4), 0.0)


class TestManifest:
    """Sorted size and SHA-256 listing."""

    def test_rows_sorted_with_digests(self, tmp_path):
        (tmp_path / "b.txt").write_bytes(b"beta")
        (tmp_path / "a.txt").write_bytes(b"alpha")
        manifest = write_manifest(tmp_path, [tmp_path / "b.txt", tmp_path / "a.txt"])
        lines = manifest.read_text().splitlines()
        assert lines[0] == "file,bytes,sha256"
        assert lines[1] == f"a.txt,5,{hashlib.sha256(b'alpha').hexdigest()}"
        assert lines[2].startswith("b.txt,4,")
