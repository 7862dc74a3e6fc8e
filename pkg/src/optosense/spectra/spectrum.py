"""
Spectrum container, frequency grids and the basic spectral operations.

Conventions:
- All power spectral densities are one-sided. A white process of variance
  sigma^2 sampled at fs has S = 2 * sigma^2 / fs.
- Spectra are immutable value objects; every operation returns a new one.
- Integration is trapezoidal on the stored grid (exact for piecewise-linear
  PSDs). Refining the grid is the caller's job, see refine_grid().
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.integrate import trapezoid

from ..errors import DomainError, InvariantViolationError, UnitMismatchError

logger = logging.getLogger(__name__)


class SpectrumUnit(str, Enum):
    """Unit tag of a PSD (unit^2 per Hz)."""
    DISPLACEMENT = "m2/Hz"
    FORCE = "N2/Hz"
    FREQUENCY = "Hz2/Hz"
    DIMENSIONLESS = "1/Hz"

    @property
    def amplitude_label(self) -> str:
        """Tag of the matching amplitude spectral density."""
        return {
            SpectrumUnit.DISPLACEMENT: "m/rtHz",
            SpectrumUnit.FORCE: "N/rtHz",
            SpectrumUnit.FREQUENCY: "Hz/rtHz",
            SpectrumUnit.DIMENSIONLESS: "1/rtHz",
        }[self]


def _frozen_array(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True).reshape(-1)
    arr.flags.writeable = False
    return arr


def _check_grid(frequencies: np.ndarray) -> None:
    if frequencies.size < 2:
        raise InvariantViolationError("a spectrum needs at least two frequency points")
    if not np.all(np.isfinite(frequencies)):
        raise InvariantViolationError("frequency grid contains non-finite values")
    if np.any(np.diff(frequencies) <= 0):
        raise InvariantViolationError("frequency grid must be strictly increasing")


@dataclass(frozen=True, eq=False)
class NoiseSpectrum:
    """
    One-sided PSD sampled on a strictly increasing frequency grid.

    resolution_bandwidth is set by estimators (Welch) and records the
    equivalent noise bandwidth of the analysis window in Hz.
    """
    frequencies: np.ndarray
    values: np.ndarray
    unit: SpectrumUnit = SpectrumUnit.DISPLACEMENT
    resolution_bandwidth: Optional[float] = None
    label: str = ""

    sidedness: str = field(default="one", init=False)

    def __post_init__(self):
        freqs = _frozen_array(self.frequencies, "frequencies")
        vals = _frozen_array(self.values, "values")
        if freqs.shape != vals.shape:
            raise InvariantViolationError(
                f"grid and values differ in length ({freqs.size} vs {vals.size})"
            )
        _check_grid(freqs)
        if np.any(np.isnan(vals)):
            raise InvariantViolationError("PSD contains NaN values")
        if np.any(vals < 0):
            raise InvariantViolationError(
                f"PSD values must be non-negative (min {vals.min():.3e})"
            )
        object.__setattr__(self, "frequencies", freqs)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "unit", SpectrumUnit(self.unit))

    def __eq__(self, other) -> bool:
        if not isinstance(other, NoiseSpectrum):
            return NotImplemented
        return (
            self.unit == other.unit
            and self.resolution_bandwidth == other.resolution_bandwidth
            and self.label == other.label
            and np.array_equal(self.frequencies, other.frequencies)
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None

    def __len__(self) -> int:
        return self.frequencies.size

    @property
    def f_min(self) -> float:
        return float(self.frequencies[0])

    @property
    def f_max(self) -> float:
        return float(self.frequencies[-1])

    def _check_compatible(self, other: "NoiseSpectrum") -> None:
        if self.unit != other.unit:
            raise UnitMismatchError(
                f"cannot combine spectra in {self.unit.value} and {other.unit.value}"
            )
        if self.frequencies.shape != other.frequencies.shape or not np.array_equal(
            self.frequencies, other.frequencies
        ):
            raise DomainError("spectra live on different frequency grids; resample first")

    def __add__(self, other: "NoiseSpectrum") -> "NoiseSpectrum":
        if not isinstance(other, NoiseSpectrum):
            return NotImplemented
        self._check_compatible(other)
        return NoiseSpectrum(self.frequencies, self.values + other.values, self.unit)

    def scaled(self, factor: float, unit: Optional[SpectrumUnit] = None) -> "NoiseSpectrum":
        """Multiply every value by factor (>= 0), optionally retagging the unit."""
        if factor < 0:
            raise DomainError("a PSD can only be scaled by a non-negative factor")
        return NoiseSpectrum(
            self.frequencies,
            self.values * factor,
            unit or self.unit,
            self.resolution_bandwidth,
            self.label,
        )

    def with_label(self, label: str) -> "NoiseSpectrum":
        return NoiseSpectrum(
            self.frequencies, self.values, self.unit, self.resolution_bandwidth, label
        )

    def value_at(self, f) -> np.ndarray:
        """Linear interpolation inside the grid span; outside is a domain error."""
        f = np.asarray(f, dtype=float)
        if np.any(f < self.f_min) or np.any(f > self.f_max):
            raise DomainError(
                f"frequency outside spectrum span [{self.f_min:g}, {self.f_max:g}] Hz"
            )
        return np.interp(f, self.frequencies, self.values)

    def resample(self, frequencies, loglog: bool = True) -> "NoiseSpectrum":
        """
        Resample onto a new grid that must lie inside the current span.

        loglog interpolates log(value) against log(frequency); spectra with
        zero values are interpolated linearly in value against log(frequency).
        """
        target = np.asarray(frequencies, dtype=float)
        outside = target.size and (
            target[0] < self.f_min * (1 - 1e-12) or target[-1] > self.f_max * (1 + 1e-12)
        )
        if outside:
            raise DomainError(
                f"target grid [{target[0]:g}, {target[-1]:g}] Hz outside spectrum span "
                f"[{self.f_min:g}, {self.f_max:g}] Hz"
            )
        target_clipped = np.clip(target, self.f_min, self.f_max)
        if loglog and self.f_min > 0 and np.all(self.values > 0):
            values = np.exp(
                np.interp(
                    np.log(target_clipped), np.log(self.frequencies), np.log(self.values)
                )
            )
        elif loglog and self.f_min > 0:
            values = np.interp(np.log(target_clipped), np.log(self.frequencies), self.values)
        else:
            values = np.interp(target_clipped, self.frequencies, self.values)
        return NoiseSpectrum(target, values, self.unit, label=self.label)


@dataclass(frozen=True, eq=False)
class AmplitudeSpectrum:
    """Amplitude spectral density (unit per root-Hz) derived from a PSD."""
    frequencies: np.ndarray
    values: np.ndarray
    unit: SpectrumUnit = SpectrumUnit.DISPLACEMENT

    def __post_init__(self):
        object.__setattr__(self, "frequencies", _frozen_array(self.frequencies, "frequencies"))
        object.__setattr__(self, "values", _frozen_array(self.values, "values"))

    @property
    def unit_label(self) -> str:
        return self.unit.amplitude_label

    def to_psd(self) -> NoiseSpectrum:
        return NoiseSpectrum(self.frequencies, np.square(self.values), self.unit)


class FrequencyGrid(BaseModel):
    """Frequency sampling description (linear or logarithmic)."""
    model_config = ConfigDict(frozen=True, extra="forbid")

    f_min_hz: float = Field(..., ge=0, description="Lowest frequency")
    f_max_hz: float = Field(..., gt=0, description="Highest frequency")
    n_points: int = Field(..., ge=2, description="Number of grid points")
    spacing: Literal["log", "linear"] = Field(default="log")
    refine_resonances: bool = Field(
        default=True,
        description="Add dense linear sub-grids around mechanical resonances",
    )

    @field_validator("spacing", mode="before")
    @classmethod
    def _alias_spacing(cls, value):
        if isinstance(value, str) and value.strip().lower() in ("lin", "linear"):
            return "linear"
        return value

    @model_validator(mode="after")
    def _check_span(self):
        if self.f_max_hz <= self.f_min_hz:
            raise ValueError("f_max_hz must exceed f_min_hz")
        if self.spacing == "log" and self.f_min_hz <= 0:
            raise ValueError("f_min_hz must be positive for log spacing")
        return self

    def frequencies(self) -> np.ndarray:
        if self.spacing == "log":
            return np.logspace(np.log10(self.f_min_hz), np.log10(self.f_max_hz), self.n_points)
        return np.linspace(self.f_min_hz, self.f_max_hz, self.n_points)

    @classmethod
    def parse(cls, text: str) -> "FrequencyGrid":
        """Parse the CLI form 'f_min,f_max,n,log|lin'."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise DomainError(f"grid must be 'f_min,f_max,n,log|lin', got {text!r}")
        try:
            return cls(
                f_min_hz=float(parts[0]),
                f_max_hz=float(parts[1]),
                n_points=int(parts[2]),
                spacing=parts[3],
            )
        except ValueError as exc:
            raise DomainError(f"invalid grid {text!r}: {exc}") from exc


def refine_grid(
    base: np.ndarray,
    centers: Iterable[float],
    linewidths: Iterable[float],
    half_span_linewidths: float = 50.0,
    points_per_linewidth: int = 40,
) -> np.ndarray:
    """
    Merge dense linear sub-grids around each resonance into a base grid.

    Each sub-grid spans center +/- half_span_linewidths * linewidth and is
    clipped to the base span. Returns a sorted array of unique frequencies.
    """
    base = np.asarray(base, dtype=float)
    lo, hi = base[0], base[-1]
    pieces = [base]
    for center, width in zip(centers, linewidths):
        if width <= 0 or not (lo <= center <= hi):
            continue
        a = max(lo, center - half_span_linewidths * width)
        b = min(hi, center + half_span_linewidths * width)
        n = int(np.ceil((b - a) / width * points_per_linewidth)) + 1
        pieces.append(np.linspace(a, b, max(n, 3)))
    merged = np.unique(np.concatenate(pieces))
    logger.debug("refined grid: %d -> %d points", base.size, merged.size)
    return merged


def asd_from_psd(spectrum: NoiseSpectrum) -> AmplitudeSpectrum:
    """Element-wise square root: unit^2/Hz -> unit/rtHz."""
    if np.any(spectrum.values < 0):
        raise InvariantViolationError("cannot take the amplitude of a negative PSD")
    return AmplitudeSpectrum(spectrum.frequencies, np.sqrt(spectrum.values), spectrum.unit)


def integrate_psd(spectrum: NoiseSpectrum, f_lo: float, f_hi: float) -> float:
    """
    Trapezoidal variance (unit^2) between f_lo and f_hi.

    End points inside a grid interval are linearly interpolated, so the
    integral is exact for the piecewise-linear PSD and additive over
    adjacent intervals.
    """
    if f_hi < f_lo:
        raise DomainError(f"empty integration range [{f_lo}, {f_hi}]")
    if f_lo < spectrum.f_min or f_hi > spectrum.f_max:
        raise DomainError(
            f"integration range [{f_lo:g}, {f_hi:g}] Hz outside grid "
            f"[{spectrum.f_min:g}, {spectrum.f_max:g}] Hz"
        )
    if f_hi == f_lo:
        return 0.0
    freqs = spectrum.frequencies
    inner = (freqs > f_lo) & (freqs < f_hi)
    x = np.concatenate(([f_lo], freqs[inner], [f_hi]))
    y = np.concatenate(
        (
            [np.interp(f_lo, freqs, spectrum.values)],
            spectrum.values[inner],
            [np.interp(f_hi, freqs, spectrum.values)],
        )
    )
    return float(trapezoid(y, x))


def total_variance(spectrum: NoiseSpectrum) -> float:
    """Integral of the PSD over its whole grid."""
    return float(trapezoid(spectrum.values, spectrum.frequencies))


def sum_spectra(spectra: Iterable[NoiseSpectrum]) -> NoiseSpectrum:
    """Pointwise sum of spectra sharing grid and unit."""
    spectra = list(spectra)
    if not spectra:
        raise DomainError("nothing to sum")
    total = spectra[0]
    for spectrum in spectra[1:]:
        total = total + spectrum
    return total
