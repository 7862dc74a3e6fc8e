"""Spectrum container, constants and file formats."""

from .constants import C_LIGHT, CONSTANTS, H_PLANCK, K_B, PhysicalConstants, photon_flux
from .io import (
    TimeSeries,
    read_spectrum_csv,
    read_timeseries_binary,
    write_manifest,
    write_spectrum_csv,
    write_timeseries_binary,
    write_timeseries_csv,
)
from .spectrum import (
    AmplitudeSpectrum,
    FrequencyGrid,
    NoiseSpectrum,
    SpectrumUnit,
    asd_from_psd,
    integrate_psd,
    refine_grid,
    sum_spectra,
    total_variance,
)

__all__ = [
    "AmplitudeSpectrum",
    "CONSTANTS",
    "C_LIGHT",
    "FrequencyGrid",
    "H_PLANCK",
    "K_B",
    "NoiseSpectrum",
    "PhysicalConstants",
    "SpectrumUnit",
    "TimeSeries",
    "asd_from_psd",
    "integrate_psd",
    "photon_flux",
    "read_spectrum_csv",
    "read_timeseries_binary",
    "refine_grid",
    "sum_spectra",
    "total_variance",
    "write_manifest",
    "write_spectrum_csv",
    "write_timeseries_binary",
    "write_timeseries_csv",
]
