"""
Single-mode mechanics: susceptibility, thermal noise and driven response.

Viscous damping throughout. With Omega = 2*pi*f, Omega_m = 2*pi*f_m and
gamma = Omega_m / Q:

    chi(Omega) = 1 / (m_eff * (Omega_m^2 - Omega^2 + i*gamma*Omega))
    S_F        = 4 * k_B * T * m_eff * gamma      (one-sided, N^2/Hz)
    S_x(f)     = |chi|^2 * S_F                    (one-sided, m^2/Hz)

so that the integral of S_x over f equals k_B*T / (m_eff * Omega_m^2).
"""

import csv
import logging
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from pydantic import ValidationError

from ..errors import ConfigurationError, DomainError, format_validation_error
from ..models.parameters import Environment, MechanicalMode
from ..spectra.constants import K_B
from ..spectra.spectrum import FrequencyGrid, NoiseSpectrum, SpectrumUnit, refine_grid

logger = logging.getLogger(__name__)

REFINE_HALF_SPAN_LINEWIDTHS = 50.0
REFINE_POINTS_PER_LINEWIDTH = 40


def resolve_frequencies(grid, modes: Iterable[MechanicalMode] = ()) -> np.ndarray:
    """
    Turn a FrequencyGrid (or an explicit array) into sample frequencies.

    A FrequencyGrid with refine_resonances set gets a dense linear sub-grid
    around each mode so high-Q peaks are resolved.
    """
    if isinstance(grid, FrequencyGrid):
        frequencies = grid.frequencies()
        modes = list(modes)
        if grid.refine_resonances and modes:
            frequencies = refine_grid(
                frequencies,
                [m.resonance_frequency_hz for m in modes],
                [m.linewidth_hz for m in modes],
                REFINE_HALF_SPAN_LINEWIDTHS,
                REFINE_POINTS_PER_LINEWIDTH,
            )
        return frequencies
    frequencies = np.asarray(grid, dtype=float)
    if frequencies.ndim != 1 or frequencies.size < 2:
        raise DomainError("frequency grid must be a 1-D array of at least two points")
    return frequencies


def susceptibility(mode: MechanicalMode, f):
    """
    Complex mechanical susceptibility in m/N.

    Im(chi) <= 0 for f > 0 (passive, dissipative response).
    """
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise DomainError("frequencies must be non-negative")
    omega = 2.0 * math.pi * f
    denominator = mode.effective_mass_kg * (
        mode.angular_frequency**2 - omega**2 + 1j * mode.damping_rate * omega
    )
    chi = 1.0 / denominator
    return complex(chi) if chi.ndim == 0 else chi


def thermal_force_psd(mode: MechanicalMode, env: Environment) -> float:
    """White one-sided Langevin force PSD 4 k_B T m_eff Omega_m / Q (N^2/Hz)."""
    return 4.0 * K_B * env.temperature_k * mode.effective_mass_kg * mode.damping_rate


def thermal_force_spectrum(mode: MechanicalMode, env: Environment, frequencies) -> NoiseSpectrum:
    frequencies = np.asarray(frequencies, dtype=float)
    values = np.full(frequencies.shape, thermal_force_psd(mode, env))
    return NoiseSpectrum(frequencies, values, SpectrumUnit.FORCE, label=f"force_{mode.label}")


def thermal_displacement_psd_values(mode: MechanicalMode, env: Environment, f) -> np.ndarray:
    """|chi(f)|^2 * S_F evaluated on an arbitrary array of frequencies."""
    omega = 2.0 * math.pi * np.asarray(f, dtype=float)
    denominator = (mode.angular_frequency**2 - omega**2) ** 2 + (mode.damping_rate * omega) ** 2
    return thermal_force_psd(mode, env) / (mode.effective_mass_kg**2 * denominator)


def thermal_displacement_psd(mode: MechanicalMode, env: Environment, grid) -> NoiseSpectrum:
    """
    Thermal displacement PSD of one mode.

    Args:
        mode: Mechanical mode
        env: Bath temperature
        grid: FrequencyGrid or array of frequencies in Hz

    Returns:
        NoiseSpectrum in m^2/Hz labelled 'thermal_<mode label>'
    """
    frequencies = resolve_frequencies(grid, [mode])
    values = thermal_displacement_psd_values(mode, env, frequencies)
    return NoiseSpectrum(
        frequencies, values, SpectrumUnit.DISPLACEMENT, label=f"thermal_{mode.label}"
    )


def equipartition_variance(mode: MechanicalMode, env: Environment) -> float:
    """k_B T / (m_eff Omega_m^2) in m^2."""
    return K_B * env.temperature_k / mode.stiffness


def rms_displacement(mode: MechanicalMode, env: Environment) -> float:
    return math.sqrt(equipartition_variance(mode, env))


def peak_thermal_asd(mode: MechanicalMode, env: Environment) -> float:
    """Thermal ASD at resonance, sqrt(4 k_B T Q / (m_eff Omega_m^3))."""
    return math.sqrt(
        4.0
        * K_B
        * env.temperature_k
        * mode.quality_factor
        / (mode.effective_mass_kg * mode.angular_frequency**3)
    )


def driven_response(mode: MechanicalMode, force_amplitude: float, f):
    """Displacement amplitude |chi(f)| * F for a sinusoidal force of amplitude F."""
    if force_amplitude < 0:
        raise DomainError(f"force amplitude must be non-negative, got {force_amplitude!r}")
    response = np.abs(susceptibility(mode, f)) * force_amplitude
    return float(response) if np.ndim(response) == 0 else response


def driven_response_sweep(
    mode: MechanicalMode,
    force_amplitude: float,
    span_linewidths: float = 10.0,
    n_points: int = 401,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Sweep a sinusoidal drive through resonance.

    Returns:
        (frequencies, amplitudes) over f_m +/- span_linewidths * f_m / Q
    """
    if n_points < 2:
        raise DomainError("a sweep needs at least two points")
    half = span_linewidths * mode.linewidth_hz
    lo = max(mode.resonance_frequency_hz - half, 0.0)
    frequencies = np.linspace(lo, mode.resonance_frequency_hz + half, n_points)
    return frequencies, driven_response(mode, force_amplitude, frequencies)


def check_unique_labels(modes: Sequence[MechanicalMode]) -> None:
    seen = set()
    for mode in modes:
        if mode.label in seen:
            raise ConfigurationError(f"duplicate mode label {mode.label!r}", section="modes")
        seen.add(mode.label)


MODE_TABLE_COLUMNS = ("label", "f_m_hz", "m_eff_kg", "q", "fem_f_hz", "fem_m_kg")


def _optional_float(text: str):
    text = text.strip()
    return float(text) if text else None


def read_mode_table(path) -> list[MechanicalMode]:
    """
    Load modes from a CSV with columns label,f_m_hz,m_eff_kg,q,fem_f_hz,fem_m_kg.

    The two FEM columns may be left empty. Lines starting with '#' are
    comments.

    Raises:
        FileNotFoundError: If the table does not exist
        ConfigurationError: On a malformed header, row or duplicate label
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Mode table not found: {path}")
    with open(path, "r", encoding="utf-8", newline="") as f:
        rows = [line for line in f if line.strip() and not line.lstrip().startswith("#")]
    reader = csv.DictReader(rows)
    if tuple(name.strip() for name in (reader.fieldnames or ())) != MODE_TABLE_COLUMNS:
        raise ConfigurationError(
            f"{path}: expected columns {','.join(MODE_TABLE_COLUMNS)}", section="modes"
        )
    modes = []
    for number, row in enumerate(reader, start=2):
        row = {key.strip(): (value or "") for key, value in row.items()}
        try:
            modes.append(
                MechanicalMode(
                    label=row["label"].strip(),
                    resonance_frequency_hz=float(row["f_m_hz"]),
                    effective_mass_kg=float(row["m_eff_kg"]),
                    quality_factor=float(row["q"]),
                    fem_frequency_hz=_optional_float(row["fem_f_hz"]),
                    fem_effective_mass_kg=_optional_float(row["fem_m_kg"]),
                )
            )
        except ValidationError as exc:
            raise ConfigurationError(
                f"{path}, row {number}: {format_validation_error(exc)}", section="modes"
            ) from exc
        except ValueError as exc:
            raise ConfigurationError(f"{path}, row {number}: {exc}", section="modes") from exc
    if not modes:
        raise ConfigurationError(f"{path}: mode table is empty", section="modes")
    check_unique_labels(modes)
    logger.debug("loaded %d modes from %s", len(modes), path)
    return modes
