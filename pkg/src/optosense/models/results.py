"""
Pydantic models for everything the simulator and estimators return.
"""

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..spectra.spectrum import NoiseSpectrum


class ResultModel(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class DecadeSummary(ResultModel):
    """Which noise dominates one decade of the budget."""
    f_lo_hz: float
    f_hi_hz: float
    dominant: str = Field(..., description="Component with the largest variance in the decade")
    total_rms_m: float = Field(..., description="sqrt of the integrated total PSD")


class BudgetReport(ResultModel):
    """Displacement-noise budget on a common grid."""
    frequencies: np.ndarray
    components: dict[str, NoiseSpectrum] = Field(
        ..., description="Independent contributions; total is their pointwise sum"
    )
    mode_components: dict[str, NoiseSpectrum] = Field(
        default_factory=dict, description="Per-mode thermal spectra (already inside 'thermal')"
    )
    total: NoiseSpectrum
    sensing_floor: Optional[NoiseSpectrum] = Field(
        default=None, description="Sum of every component that is not resonator motion"
    )
    dominant: list[str] = Field(
        default_factory=list, description="Dominant component label at each grid point"
    )
    decades: list[DecadeSummary] = Field(default_factory=list)

    def component(self, name: str) -> NoiseSpectrum:
        return self.components[name]


class CoolingResult(ResultModel):
    """Closed-loop spectra and equipartition temperature at one gain."""
    gain: float
    effective_temperature_k: float
    effective_linewidth_hz: float = Field(..., description="(1 + g) * f_m / Q")
    area_m2: float = Field(..., description="Variance of the true motion")
    closed_form_temperature_k: float = Field(
        ..., description="Analytic T_eff including imprecision heating"
    )
    true_motion: NoiseSpectrum
    in_loop: NoiseSpectrum


class LorentzianFit(ResultModel):
    """Least-squares fit of one resonance in a PSD."""
    center_frequency_hz: float
    linewidth_hz: float = Field(..., gt=0, description="FWHM")
    peak_psd: float = Field(..., description="Peak height above background")
    background_psd: float
    quality_factor: float = Field(..., description="center / linewidth")
    area_m2: float = Field(..., description="Background-subtracted peak variance")
    effective_mass_kg: float = Field(..., description="From equipartition at the bath temperature")
    temperature_k: float = Field(..., description="Bath temperature assumed for effective_mass_kg")
    model: str = "lorentzian"
    window_lo_hz: float
    window_hi_hz: float
    center_stderr_hz: float = float("nan")
    linewidth_stderr_hz: float = float("nan")
    peak_stderr: float = float("nan")
    background_stderr: float = float("nan")
    residual_norm: float = Field(..., description="rms of the weighted relative residuals")
    points_per_linewidth: float
    kernel_applied: bool = Field(
        default=False, description="Welch window response convolved into the model"
    )
    n_function_evaluations: int = 0


class ScanPoint(ResultModel):
    position_m: float
    relative_level: float = Field(..., ge=0, description="Thermal ASD relative to the scan maximum")
    effective_mass_kg: float
    captured_fraction: float


class ManifestEntry(ResultModel):
    file: str
    bytes: int
    sha256: str


class RunManifest(ResultModel):
    command: str
    out_dir: str
    entries: list[ManifestEntry] = Field(default_factory=list)
