"""
Cold-damping feedback on a single mode.

The loop applies F_fb = -i*Omega*g*gamma*m_eff*(x + x_n), a viscous force
derived from the measured position, where x_n is white imprecision noise of
PSD S_imp. With D_cl = Omega_m^2 - Omega^2 + i*(1+g)*gamma*Omega:

    true motion  S_x = [S_F/m^2 + g^2 gamma^2 Omega^2 S_imp] / |D_cl|^2
    in loop      S_y = [S_F/m^2 + |Omega_m^2 - Omega^2 + i gamma Omega|^2 S_imp] / |D_cl|^2

Integrating S_x gives the closed form

    T_eff = T / (1 + g) + B * g^2 / (1 + g),   B = m Omega_m^2 gamma S_imp / (4 k_B)

which has its minimum at g* = sqrt(1 + T/B) - 1.
"""

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from ..errors import AccuracyWarning, DomainError
from ..models.parameters import Environment, FeedbackController, MechanicalMode
from ..models.results import CoolingResult
from ..spectra.constants import K_B
from ..spectra.spectrum import NoiseSpectrum, SpectrumUnit, refine_grid, total_variance
from .mechanics import resolve_frequencies, thermal_force_psd

logger = logging.getLogger(__name__)

# Integration span in units of f_m, on each side of the resonance.
SPAN_DECADES = 2
LOG_POINTS = 20000
LINEAR_HALF_SPAN_LINEWIDTHS = 50.0
LINEAR_POINTS = 4001


def gain_tag(gain: float) -> str:
    """Shortest text that round-trips the gain; integral gains drop the '.0'."""
    text = repr(float(gain))
    return text[:-2] if text.endswith(".0") else text


def closed_loop_linewidth(mode: MechanicalMode, controller: FeedbackController) -> float:
    """(1 + g) * f_m / Q in Hz."""
    return (1.0 + controller.effective_gain) * mode.linewidth_hz


def cooling_grid(mode: MechanicalMode, gain: float = 0.0) -> np.ndarray:
    """
    Integration grid for closed-loop spectra.

    Log-spaced over [f_m/100, 100 f_m] plus a linear sub-grid of
    f_m +/- 50 closed-loop linewidths, clipped to the log span.
    """
    f_m = mode.resonance_frequency_hz
    span = 10.0**SPAN_DECADES
    base = np.logspace(math.log10(f_m / span), math.log10(f_m * span), LOG_POINTS)
    width = (1.0 + gain) * mode.linewidth_hz
    lo = max(base[0], f_m - LINEAR_HALF_SPAN_LINEWIDTHS * width)
    hi = min(base[-1], f_m + LINEAR_HALF_SPAN_LINEWIDTHS * width)
    return np.unique(np.concatenate((base, np.linspace(lo, hi, LINEAR_POINTS))))


def closed_loop_psd_values(
    mode: MechanicalMode, env: Environment, controller: FeedbackController, f: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    g = controller.effective_gain
    s_imp = controller.imprecision_psd_m2_hz
    omega = 2.0 * math.pi * f
    gamma = mode.damping_rate
    detuning = mode.angular_frequency**2 - omega**2
    open_loop = detuning**2 + (gamma * omega) ** 2
    closed_loop = detuning**2 + ((1.0 + g) * gamma * omega) ** 2
    force_term = thermal_force_psd(mode, env) / mode.effective_mass_kg**2
    true_motion = (force_term + (g * gamma * omega) ** 2 * s_imp) / closed_loop
    in_loop = (force_term + open_loop * s_imp) / closed_loop
    return true_motion, in_loop


def closed_loop_psd(
    mode: MechanicalMode,
    env: Environment,
    controller: FeedbackController,
    grid=None,
) -> tuple[NoiseSpectrum, NoiseSpectrum]:
    """
    True-motion and in-loop displacement PSDs under cold damping.

    Args:
        mode: Mode under feedback
        env: Bath temperature
        controller: Gain and imprecision noise
        grid: FrequencyGrid, array, or None for cooling_grid()

    Returns:
        (true_motion, in_loop) spectra in m^2/Hz
    """
    if grid is None:
        frequencies = cooling_grid(mode, controller.effective_gain)
    else:
        frequencies = resolve_frequencies(grid)
        if getattr(grid, "refine_resonances", False):
            frequencies = refine_grid(
                frequencies,
                [mode.resonance_frequency_hz],
                [closed_loop_linewidth(mode, controller)],
            )
    true_motion, in_loop = closed_loop_psd_values(mode, env, controller, frequencies)
    suffix = f"g{gain_tag(controller.effective_gain)}"
    unit = SpectrumUnit.DISPLACEMENT
    return (
        NoiseSpectrum(frequencies, true_motion, unit, label=f"true_motion_{suffix}"),
        NoiseSpectrum(frequencies, in_loop, unit, label=f"in_loop_{suffix}"),
    )


def closed_loop_variance(
    mode: MechanicalMode, env: Environment, controller: FeedbackController
) -> float:
    """Analytic true-motion variance: ideal T/(1+g) term plus imprecision heating."""
    g = controller.effective_gain
    ideal = K_B * env.temperature_k / (mode.stiffness * (1.0 + g))
    heating = g**2 * mode.damping_rate * controller.imprecision_psd_m2_hz / (4.0 * (1.0 + g))
    return ideal + heating


def effective_temperature_closed_form(
    mode: MechanicalMode, env: Environment, controller: FeedbackController
) -> float:
    return mode.stiffness * closed_loop_variance(mode, env, controller) / K_B


def _truncated_fraction(spectrum: NoiseSpectrum, mode: MechanicalMode) -> float:
    """Lorentzian estimate of the peak area missing outside the spectrum span."""
    f0 = mode.resonance_frequency_hz
    peak = float(np.interp(f0, spectrum.frequencies, spectrum.values))
    area = total_variance(spectrum)
    if peak <= 0 or area <= 0:
        return 0.0
    width = 2.0 * area / (math.pi * peak)
    upper = math.atan(2.0 * (spectrum.f_max - f0) / width)
    lower = math.atan(2.0 * (f0 - spectrum.f_min) / width)
    inside = (upper + lower) / math.pi
    return max(0.0, 1.0 - inside)


def effective_temperature(true_motion: NoiseSpectrum, mode: MechanicalMode) -> float:
    """
    Equipartition temperature m_eff Omega_m^2 <x^2> / k_B of a spectrum.

    Warns:
        AccuracyWarning: If the spectrum does not span [f_m/100, 100 f_m];
            the warning carries the estimated missing temperature in K
    """
    if true_motion.unit != SpectrumUnit.DISPLACEMENT:
        raise DomainError("effective temperature needs a displacement spectrum")
    temperature = mode.stiffness * total_variance(true_motion) / K_B
    f_m = mode.resonance_frequency_hz
    span = 10.0**SPAN_DECADES
    if true_motion.f_min > f_m / span * (1 + 1e-9) or true_motion.f_max < f_m * span * (1 - 1e-9):
        missing = _truncated_fraction(true_motion, mode)
        error = temperature * missing / max(1.0 - missing, 1e-12)
        logger.warning(
            "spectrum span [%.4g, %.4g] Hz truncates the resonance at %.4g Hz; "
            "T_eff may be low by %.3g K",
            true_motion.f_min,
            true_motion.f_max,
            f_m,
            error,
        )
        warnings.warn(
            AccuracyWarning(f"integration span truncated, estimated error {error:.3g} K", error),
            stacklevel=2,
        )
    return temperature


def cool(
    mode: MechanicalMode,
    env: Environment,
    controller: FeedbackController,
    grid=None,
) -> CoolingResult:
    """Closed-loop spectra and temperatures at one gain."""
    true_motion, in_loop = closed_loop_psd(mode, env, controller, grid)
    area = total_variance(true_motion)
    return CoolingResult(
        gain=controller.effective_gain,
        effective_temperature_k=effective_temperature(true_motion, mode),
        effective_linewidth_hz=closed_loop_linewidth(mode, controller),
        area_m2=area,
        closed_form_temperature_k=effective_temperature_closed_form(mode, env, controller),
        true_motion=true_motion,
        in_loop=in_loop,
    )


def gain_sweep(
    mode: MechanicalMode,
    env: Environment,
    template: FeedbackController,
    gains: Sequence[float],
    grid=None,
    max_workers: Optional[int] = None,
) -> list[CoolingResult]:
    """
    Cooling results for each gain, in the order given.

    Args:
        template: Controller whose imprecision noise and enabled flag are kept
        gains: Ascending gains
        max_workers: Thread-pool size; None evaluates serially

    Raises:
        DomainError: If gains are not sorted ascending
    """
    gains = [float(g) for g in gains]
    if any(b < a for a, b in zip(gains, gains[1:])):
        raise DomainError("gains must be sorted in ascending order")
    controllers = [template.model_copy(update={"gain": g}) for g in gains]

    def run(controller: FeedbackController) -> CoolingResult:
        return cool(mode, env, controller, grid)

    if max_workers and len(controllers) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(run, controllers))
    else:
        results = [run(c) for c in controllers]
    for result in results:
        logger.info(
            "gain %g: T_eff %.4g K (closed form %.4g K)",
            result.gain,
            result.effective_temperature_k,
            result.closed_form_temperature_k,
        )
    return results


def imprecision_heating_scale(mode: MechanicalMode, imprecision_psd: float) -> float:
    """B = m Omega_m^2 gamma S_imp / (4 k_B) in K."""
    return mode.stiffness * mode.damping_rate * imprecision_psd / (4.0 * K_B)


def optimal_gain(
    mode: MechanicalMode,
    env: Environment,
    imprecision_psd: float,
    log_gain_bounds: tuple[float, float] = (-3.0, 8.0),
) -> tuple[float, float]:
    """
    Gain minimizing the closed-form effective temperature.

    A coarse log-spaced scan brackets the minimum, then a golden-section
    search on log10(g) refines it.

    Returns:
        (g*, T_eff(g*))

    Raises:
        DomainError: Without imprecision noise (T_eff keeps falling with g)
    """
    if not imprecision_psd > 0:
        raise DomainError("an optimum gain only exists with non-zero imprecision noise")

    def temperature(log_gain: float) -> float:
        controller = FeedbackController(gain=10.0**log_gain, imprecision_psd_m2_hz=imprecision_psd)
        return effective_temperature_closed_form(mode, env, controller)

    scan = np.linspace(log_gain_bounds[0], log_gain_bounds[1], 45)
    values = np.array([temperature(x) for x in scan])
    i = int(np.argmin(values))
    if i == 0 or i == scan.size - 1:
        raise DomainError("optimum gain lies outside the searched range")
    result = minimize_scalar(
        temperature, bracket=(scan[i - 1], scan[i], scan[i + 1]), method="golden", tol=1e-10
    )
    g_opt = 10.0 ** float(result.x)
    logger.debug("optimal gain %.6g after %d evaluations", g_opt, result.nfev)
    return g_opt, float(result.fun)
