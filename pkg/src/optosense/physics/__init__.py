"""Forward models: cavity readout, mechanics, noise budget and feedback cooling."""

from .budget import compose_budget, gas_index_noise, multimode_thermal
from .cavity import (
    bessel_penalty,
    cavity_bandwidth,
    finesse,
    frequency_modulation_calibration,
    frequency_noise_to_displacement,
    free_spectral_range,
    pdh_error_signal,
    pdh_slope,
    reflection_coefficient,
    shot_noise_floor,
    solve_modulation_index,
)
from .cold_damping import (
    closed_loop_psd,
    effective_temperature,
    effective_temperature_closed_form,
    gain_sweep,
    optimal_gain,
)
from .mechanics import (
    driven_response,
    rms_displacement,
    susceptibility,
    thermal_displacement_psd,
    thermal_force_psd,
)
from .modeshape import (
    ModeShape,
    clamped_beam_mode_shape,
    effective_mass_at_spot,
    overlap_scan,
)

__all__ = [
    "ModeShape",
    "bessel_penalty",
    "cavity_bandwidth",
    "clamped_beam_mode_shape",
    "closed_loop_psd",
    "compose_budget",
    "driven_response",
    "effective_mass_at_spot",
    "effective_temperature",
    "effective_temperature_closed_form",
    "finesse",
    "free_spectral_range",
    "frequency_modulation_calibration",
    "frequency_noise_to_displacement",
    "gain_sweep",
    "gas_index_noise",
    "multimode_thermal",
    "optimal_gain",
    "overlap_scan",
    "pdh_error_signal",
    "pdh_slope",
    "reflection_coefficient",
    "rms_displacement",
    "shot_noise_floor",
    "solve_modulation_index",
    "susceptibility",
    "thermal_displacement_psd",
    "thermal_force_psd",
]
