"""
Displacement-noise budget: thermal modes, shot noise, laser frequency
noise, residual-gas index noise and optional measured backgrounds, all on
one frequency grid. Independent noises add in PSD.
"""

import logging
import math
from typing import Mapping, Optional, Sequence

import numpy as np

from ..errors import DomainError
from ..models.parameters import (
    DetectionChain,
    Environment,
    GasNoiseModel,
    LaserSource,
    MechanicalMode,
    OpticalCavity,
)
from ..models.results import BudgetReport, DecadeSummary
from ..spectra.spectrum import NoiseSpectrum, SpectrumUnit, integrate_psd, sum_spectra
from .cavity import carrier_frequency, frequency_noise_to_displacement, shot_noise_psd
from .mechanics import check_unique_labels, resolve_frequencies, thermal_displacement_psd

logger = logging.getLogger(__name__)

THERMAL = "thermal"
SHOT = "shot"
FREQUENCY = "frequency"
GAS = "gas"
BACKGROUND_PREFIX = "background_"


def multimode_thermal(
    modes: Sequence[MechanicalMode], env: Environment, grid
) -> NoiseSpectrum:
    """
    Sum of the thermal PSDs of independent modes.

    Raises:
        DomainError: On an empty mode list
        ConfigurationError: On duplicate mode labels
    """
    modes = list(modes)
    if not modes:
        raise DomainError("multimode thermal noise needs at least one mode")
    check_unique_labels(modes)
    frequencies = resolve_frequencies(grid, modes)
    total = sum_spectra(thermal_displacement_psd(mode, env, frequencies) for mode in modes)
    return total.with_label(THERMAL)


def gas_index_noise(model: GasNoiseModel, grid) -> NoiseSpectrum:
    """
    Residual-gas index noise at the operating pressure.

    The reference envelope is scaled by (p / p_ref)^exponent and resampled
    onto the grid with log-log interpolation.

    Raises:
        DomainError: If the grid leaves the envelope span
    """
    frequencies = resolve_frequencies(grid)
    resampled = model.reference_envelope.resample(frequencies)
    return resampled.scaled(model.scale_factor).with_label(GAS)


def _dominant_labels(frequencies: np.ndarray, components: Mapping[str, NoiseSpectrum]) -> list[str]:
    names = sorted(components)
    stack = np.vstack([components[name].values for name in names])
    return [names[i] for i in np.argmax(stack, axis=0)]


def decade_summary(
    components: Mapping[str, NoiseSpectrum], total: NoiseSpectrum
) -> list[DecadeSummary]:
    """Dominant component (largest integrated variance) in each decade of the grid."""
    f_lo, f_hi = total.f_min, total.f_max
    if f_lo <= 0:
        f_lo = total.frequencies[1]
    edges = [f_lo]
    decade = 10.0 ** math.floor(math.log10(f_lo))
    while decade * 10 < f_hi:
        decade *= 10
        if decade > f_lo:
            edges.append(decade)
    edges.append(f_hi)
    rows = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        variances = {name: integrate_psd(spec, lo, hi) for name, spec in sorted(components.items())}
        dominant = max(variances, key=variances.get)
        rows.append(
            DecadeSummary(
                f_lo_hz=lo,
                f_hi_hz=hi,
                dominant=dominant,
                total_rms_m=math.sqrt(integrate_psd(total, lo, hi)),
            )
        )
    return rows


def compose_budget(
    cavity: OpticalCavity,
    laser: LaserSource,
    chain: DetectionChain,
    env: Environment,
    modes: Sequence[MechanicalMode],
    grid,
    gas: Optional[GasNoiseModel] = None,
    backgrounds: Optional[Mapping[str, NoiseSpectrum]] = None,
    include_shot: bool = True,
) -> BudgetReport:
    """
    Compose the full displacement-noise budget.

    Components (all m^2/Hz): 'thermal' (sum over modes), 'shot',
    'frequency' (if the laser carries an envelope), 'gas' (if a gas model is
    given) and 'background_<label>' for each additive background. The total
    is their pointwise sum; the sensing floor is the total without the
    thermal part.
    """
    modes = list(modes)
    frequencies = resolve_frequencies(grid, modes)
    logger.debug(
        "budget grid: %d points from %.4g to %.4g Hz",
        frequencies.size,
        frequencies[0],
        frequencies[-1],
    )

    components: dict[str, NoiseSpectrum] = {}
    mode_components: dict[str, NoiseSpectrum] = {}
    if modes:
        check_unique_labels(modes)
        for mode in modes:
            mode_components[f"thermal_{mode.label}"] = thermal_displacement_psd(
                mode, env, frequencies
            )
        components[THERMAL] = sum_spectra(mode_components.values()).with_label(THERMAL)
    if include_shot:
        components[SHOT] = shot_noise_psd(cavity, laser, chain, frequencies)
    if laser.frequency_noise is not None:
        components[FREQUENCY] = frequency_noise_to_displacement(
            cavity, carrier_frequency(laser), laser.frequency_noise, frequencies
        )
    if gas is not None:
        components[GAS] = gas_index_noise(gas, frequencies)
    for label, spectrum in sorted((backgrounds or {}).items()):
        if spectrum.unit != SpectrumUnit.DISPLACEMENT:
            raise DomainError(f"background {label!r} must be a displacement spectrum")
        name = f"{BACKGROUND_PREFIX}{label}"
        components[name] = spectrum.resample(frequencies).with_label(name)
    if not components:
        raise DomainError("the budget has no components")

    ordered = [components[name] for name in sorted(components)]
    total = sum_spectra(ordered).with_label("total")
    floor_parts = [components[name] for name in sorted(components) if name != THERMAL]
    sensing_floor = sum_spectra(floor_parts).with_label("sensing_floor") if floor_parts else None

    return BudgetReport(
        frequencies=frequencies,
        components=components,
        mode_components=mode_components,
        total=total,
        sensing_floor=sensing_floor,
        dominant=_dominant_labels(frequencies, components),
        decades=decade_summary(components, total),
    )


def budget_summary_text(report: BudgetReport) -> str:
    """Plain-text table of the dominant component per decade."""
    lines = ["f_lo_hz f_hi_hz dominant total_rms_m"]
    for row in report.decades:
        lines.append(f"{row.f_lo_hz:.6e} {row.f_hi_hz:.6e} {row.dominant} {row.total_rms_m:.6e}")
    return "\n".join(lines) + "\n"


def peak_to_floor_db(report: BudgetReport, f: float) -> float:
    """ASD ratio thermal / sensing floor at f, in dB (20 log10)."""
    if THERMAL not in report.components or report.sensing_floor is None:
        raise DomainError("peak-to-floor ratio needs both thermal and sensing-floor components")
    thermal = float(report.components[THERMAL].value_at(f))
    floor = float(report.sensing_floor.value_at(f))
    return 10.0 * math.log10(thermal / floor)
