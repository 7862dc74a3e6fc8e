"""
Pydantic models for the physical parameters of the sensor.

Every dimensional field carries its unit in the name. Models are frozen and
reject unknown fields, so a typo in a scenario file surfaces as a
validation error instead of a silently ignored parameter.
"""

import math
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import jn_zeros

from ..spectra.spectrum import NoiseSpectrum, SpectrumUnit

# First zero of J0: beyond it the carrier amplitude changes sign.
J0_FIRST_ZERO = float(jn_zeros(0, 1)[0])


class ParameterModel(BaseModel):
    """Base for frozen, strict parameter models."""
    model_config = ConfigDict(frozen=True, extra="forbid", arbitrary_types_allowed=True)


class OpticalCavity(ParameterModel):
    """Single-ended Fabry-Perot cavity with lumped round-trip losses."""
    length_m: float = Field(..., gt=0, description="Cavity length")
    input_transmission_T: float = Field(
        ..., gt=0, lt=1, description="Input mirror power transmission"
    )
    round_trip_loss_L: float = Field(
        default=0.0, ge=0, lt=1, description="All other round-trip power losses"
    )
    wavelength_m: float = Field(default=1.064e-6, gt=0, description="Optical wavelength")
    waist_m: float = Field(default=6.0e-5, gt=0, description="Intracavity waist (1/e^2 radius)")

    @model_validator(mode="after")
    def _check_losses(self):
        if self.input_transmission_T + self.round_trip_loss_L >= 1:
            raise ValueError("input_transmission_T + round_trip_loss_L must stay below 1")
        return self


class LaserSource(ParameterModel):
    """Phase-modulated probe laser."""
    power_w: float = Field(..., ge=0, description="Incident optical power")
    wavelength_m: float = Field(default=1.064e-6, gt=0, description="Vacuum wavelength")
    modulation_index: float = Field(
        default=0.66,
        ge=0,
        lt=J0_FIRST_ZERO,
        description="PDH phase-modulation depth m (rad)",
    )
    sideband_frequency_hz: float = Field(default=1.2e7, gt=0, description="PDH sideband offset")
    modulation_penalty: Optional[float] = Field(
        default=None,
        gt=0,
        description="Override for the shot-noise penalty F(m); None uses 1/(J0*J1)",
    )
    frequency_noise: Optional[NoiseSpectrum] = Field(
        default=None, description="Laser frequency-noise envelope (Hz^2/Hz)"
    )
    frequency_noise_file: Optional[Path] = Field(
        default=None, description="Where the envelope was loaded from"
    )

    @model_validator(mode="after")
    def _check_envelope(self):
        if self.frequency_noise is not None and self.frequency_noise.unit != SpectrumUnit.FREQUENCY:
            raise ValueError(
                f"frequency_noise must be a {SpectrumUnit.FREQUENCY.value} spectrum, "
                f"got {self.frequency_noise.unit.value}"
            )
        return self


class DetectionChain(ParameterModel):
    """Efficiencies between the cavity and the photodiode."""
    mode_matching_eta: float = Field(default=1.0, gt=0, le=1)
    detection_efficiency_eta_ph: float = Field(default=1.0, gt=0, le=1)


class Environment(ParameterModel):
    temperature_k: float = Field(default=300.0, gt=0, description="Bath temperature")


class MechanicalMode(ParameterModel):
    """One vibration mode in the single-oscillator description."""
    label: str = Field(..., min_length=1)
    resonance_frequency_hz: float = Field(..., gt=0)
    effective_mass_kg: float = Field(..., gt=0)
    quality_factor: float = Field(..., gt=0)
    fem_frequency_hz: Optional[float] = Field(
        default=None, gt=0, description="Finite-element prediction (annotation only)"
    )
    fem_effective_mass_kg: Optional[float] = Field(
        default=None, gt=0, description="Finite-element prediction (annotation only)"
    )

    @property
    def angular_frequency(self) -> float:
        return 2.0 * math.pi * self.resonance_frequency_hz

    @property
    def damping_rate(self) -> float:
        """gamma = Omega_m / Q in rad/s."""
        return self.angular_frequency / self.quality_factor

    @property
    def linewidth_hz(self) -> float:
        """FWHM of the thermal peak, f_m / Q."""
        return self.resonance_frequency_hz / self.quality_factor

    @property
    def stiffness(self) -> float:
        return self.effective_mass_kg * self.angular_frequency**2


class OpticalSpot(ParameterModel):
    center_x_m: float
    center_y_m: float
    waist_m: float = Field(..., gt=0, description="1/e^2 intensity radius")


class GasNoiseModel(ParameterModel):
    """Residual-gas index noise scaled from a reference-pressure envelope."""
    reference_envelope: NoiseSpectrum
    reference_pressure_mbar: float = Field(default=1013.25, gt=0)
    operating_pressure_mbar: float = Field(default=1.0e-2, gt=0)
    pressure_exponent: float = Field(default=2.0, description="Exponent applied to the PSD")
    envelope_file: Optional[Path] = None

    @model_validator(mode="after")
    def _check_unit(self):
        if self.reference_envelope.unit != SpectrumUnit.DISPLACEMENT:
            raise ValueError("gas envelope must be a displacement spectrum (m2/Hz)")
        return self

    @property
    def scale_factor(self) -> float:
        ratio = self.operating_pressure_mbar / self.reference_pressure_mbar
        return ratio**self.pressure_exponent


class FeedbackController(ParameterModel):
    """Cold-damping loop: derivative gain and re-injected imprecision noise."""
    gain: float = Field(default=0.0, ge=0, description="Dimensionless viscous gain g")
    imprecision_psd_m2_hz: float = Field(
        default=0.0, ge=0, description="White measurement noise fed back by the loop"
    )
    enabled: bool = True

    @property
    def effective_gain(self) -> float:
        return self.gain if self.enabled else 0.0
