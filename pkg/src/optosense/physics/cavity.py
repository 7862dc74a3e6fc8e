"""
Fabry-Perot cavity optics and Pound-Drever-Hall readout.

The cavity is single-ended: light enters through the input mirror (power
transmission T) and every other loss (end-mirror transmission, absorption,
scattering) is lumped into one round-trip power loss L.

Conventions:
- finesse F = 2*pi / (T + L)
- free spectral range FSR = c / (2 * length)
- bandwidth is the half width at half maximum, FSR / (2F)
- detuning phase phi = 2*pi * detuning / FSR
"""

import logging
import math
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import j0, j1

from ..errors import (
    DegenerateSignalError,
    DomainError,
    InfiniteSensitivityError,
    UnitMismatchError,
)
from ..models.parameters import J0_FIRST_ZERO, DetectionChain, LaserSource, OpticalCavity
from ..spectra.constants import C_LIGHT, optical_frequency, photon_flux
from ..spectra.spectrum import NoiseSpectrum, SpectrumUnit

logger = logging.getLogger(__name__)

# Below this |J0*J1| the PDH error signal is considered absent.
DEGENERATE_BESSEL_PRODUCT = 1e-12


def finesse(cavity: OpticalCavity) -> float:
    """2*pi over the total round-trip power loss."""
    total = cavity.input_transmission_T + cavity.round_trip_loss_L
    if total <= 0:
        raise DomainError("total cavity loss T + L must be positive")
    return 2.0 * math.pi / total


def free_spectral_range(cavity: OpticalCavity) -> float:
    return C_LIGHT / (2.0 * cavity.length_m)


def cavity_bandwidth(cavity: OpticalCavity) -> float:
    """Half-width at half maximum of the resonance, c / (4 * length * F)."""
    return free_spectral_range(cavity) / (2.0 * finesse(cavity))


def _amplitude_factors(cavity: OpticalCavity) -> tuple[float, float]:
    r1 = math.sqrt(1.0 - cavity.input_transmission_T)
    a = math.sqrt(1.0 - cavity.round_trip_loss_L)
    return r1, a


def _airy_reflection(cavity: OpticalCavity, phase) -> np.ndarray:
    r1, a = _amplitude_factors(cavity)
    e = a * np.exp(1j * np.asarray(phase, dtype=float))
    return (e - r1) / (1.0 - r1 * e)


def _airy_reflection_derivative(cavity: OpticalCavity, phase) -> np.ndarray:
    """d r / d phi."""
    r1, a = _amplitude_factors(cavity)
    e = a * np.exp(1j * np.asarray(phase, dtype=float))
    return 1j * e * (1.0 - r1**2) / (1.0 - r1 * e) ** 2


def _detuning_phase(cavity: OpticalCavity, detuning) -> np.ndarray:
    return 2.0 * math.pi * np.asarray(detuning, dtype=float) / free_spectral_range(cavity)


def reflection_coefficient(cavity: OpticalCavity, detuning):
    """
    Complex amplitude reflection of the cavity.

    Args:
        cavity: Cavity parameters
        detuning: Laser detuning from resonance in Hz (scalar or array)

    Returns:
        r = (a e^{i phi} - r1) / (1 - r1 a e^{i phi}) with r1 = sqrt(1 - T),
        a = sqrt(1 - L)

    Raises:
        DomainError: If any |detuning| reaches half a free spectral range
    """
    detuning = np.asarray(detuning, dtype=float)
    half_fsr = free_spectral_range(cavity) / 2.0
    if np.any(np.abs(detuning) >= half_fsr):
        raise DomainError(
            "detuning must lie inside the principal free spectral range "
            f"(|delta| < {half_fsr:.4g} Hz)"
        )
    r = _airy_reflection(cavity, _detuning_phase(cavity, detuning))
    return complex(r) if r.ndim == 0 else r


def reflected_power(cavity: OpticalCavity, detuning):
    """|r|^2, the reflected power fraction."""
    return np.abs(reflection_coefficient(cavity, detuning)) ** 2


def bessel_penalty(modulation_index: float) -> float:
    """
    Shot-noise penalty F(m) = 1 / (J0(m) * J1(m)) of the PDH scheme.

    Raises:
        DomainError: For m outside (0, first zero of J0)
    """
    m = float(modulation_index)
    if not 0.0 < m < J0_FIRST_ZERO:
        raise DomainError(
            f"modulation index must lie in (0, {J0_FIRST_ZERO:.4f}), got {m!r}"
        )
    product = j0(m) * j1(m)
    if abs(product) < DEGENERATE_BESSEL_PRODUCT:
        raise DomainError(f"J0*J1 vanishes at m = {m!r}")
    return float(1.0 / product)


def optimal_modulation_index() -> float:
    """Modulation index maximizing J0*J1 (minimum penalty, m ~ 1.08)."""
    result = minimize_scalar(
        lambda m: -j0(m) * j1(m),
        bounds=(1e-6, J0_FIRST_ZERO - 1e-6),
        method="bounded",
        options={"xatol": 1e-10},
    )
    return float(result.x)


def solve_modulation_index(target_penalty: float, branch: str = "lower") -> float:
    """
    Find m such that bessel_penalty(m) equals target_penalty.

    Args:
        target_penalty: Desired F(m), at least the minimum penalty (~2.95)
        branch: "lower" for m below the optimum, "upper" for m above it

    Raises:
        DomainError: If the target is below the minimum penalty or the branch
            is unknown
    """
    m_opt = optimal_modulation_index()
    minimum = bessel_penalty(m_opt)
    if target_penalty < minimum:
        raise DomainError(
            f"penalty {target_penalty!r} is below the minimum {minimum:.4f} of 1/(J0*J1)"
        )
    if branch == "lower":
        lo, hi = 1e-6, m_opt
    elif branch == "upper":
        lo, hi = m_opt, J0_FIRST_ZERO - 1e-9
    else:
        raise DomainError(f"branch must be 'lower' or 'upper', got {branch!r}")
    return float(brentq(lambda m: bessel_penalty(m) - target_penalty, lo, hi, xtol=1e-12))


def laser_penalty(laser: LaserSource) -> float:
    """Configured override, or 1/(J0*J1) at the laser's modulation index."""
    if laser.modulation_penalty is not None:
        return laser.modulation_penalty
    return bessel_penalty(laser.modulation_index)


def _bessel_product(laser: LaserSource) -> float:
    product = float(j0(laser.modulation_index) * j1(laser.modulation_index))
    if abs(product) < DEGENERATE_BESSEL_PRODUCT:
        raise DegenerateSignalError(
            f"modulation index {laser.modulation_index!r} sits on a Bessel zero: no PDH signal"
        )
    return product


def _check_resolved_sidebands(cavity: OpticalCavity, laser: LaserSource) -> None:
    if laser.sideband_frequency_hz <= cavity_bandwidth(cavity):
        raise DomainError(
            f"sideband frequency {laser.sideband_frequency_hz:.4g} Hz must exceed the "
            f"cavity bandwidth {cavity_bandwidth(cavity):.4g} Hz"
        )


def pdh_error_signal(cavity: OpticalCavity, laser: LaserSource, detuning):
    """
    Demodulated PDH error signal (normalized to the incident power).

    eps(delta) = 2 J0 J1 Im[r*(delta) r(delta + Omega) - r(delta) r*(delta - Omega)]

    Odd in detuning, zero on resonance, positive slope through zero.

    Raises:
        DegenerateSignalError: If J0(m) * J1(m) vanishes
        DomainError: If the sidebands are not resolved by the cavity
    """
    product = _bessel_product(laser)
    _check_resolved_sidebands(cavity, laser)
    detuning = np.asarray(detuning, dtype=float)
    r0 = np.asarray(reflection_coefficient(cavity, detuning))
    phase_step = _detuning_phase(cavity, laser.sideband_frequency_hz)
    phi = _detuning_phase(cavity, detuning)
    r_plus = _airy_reflection(cavity, phi + phase_step)
    r_minus = _airy_reflection(cavity, phi - phase_step)
    signal = 2.0 * product * np.imag(np.conj(r0) * r_plus - r0 * np.conj(r_minus))
    return float(signal) if signal.ndim == 0 else signal


def pdh_slope(cavity: OpticalCavity, laser: LaserSource) -> float:
    """
    Analytic d(eps)/d(delta) at zero detuning, per Hz of detuning.

    This is the calibration factor converting error-signal fluctuations
    into frequency (and, via displacement_to_detuning, length) noise.
    """
    product = _bessel_product(laser)
    _check_resolved_sidebands(cavity, laser)
    dphi = 2.0 * math.pi / free_spectral_range(cavity)
    step = _detuning_phase(cavity, laser.sideband_frequency_hz)
    r0 = _airy_reflection(cavity, 0.0)
    rp = _airy_reflection(cavity, step)
    rm = _airy_reflection(cavity, -step)
    d0 = _airy_reflection_derivative(cavity, 0.0)
    dp = _airy_reflection_derivative(cavity, step)
    dm = _airy_reflection_derivative(cavity, -step)
    derivative = (
        np.conj(d0) * rp + np.conj(r0) * dp - d0 * np.conj(rm) - r0 * np.conj(dm)
    )
    return float(2.0 * product * np.imag(derivative) * dphi)


def shot_noise_floor(cavity: OpticalCavity, laser: LaserSource, chain: DetectionChain, f):
    """
    Shot-noise-limited displacement sensitivity in m/rtHz.

    dx_min = lambda / (16 F sqrt(I)) * F(m) / sqrt(eta * eta_ph)
             * (T + L) / T * sqrt(1 + (f / bandwidth)^2)

    Raises:
        InfiniteSensitivityError: If the laser power is zero
    """
    flux = photon_flux(laser.power_w, laser.wavelength_m)
    if flux <= 0:
        raise InfiniteSensitivityError("zero optical power: the shot-noise floor diverges")
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise DomainError("frequencies must be non-negative")
    base = laser.wavelength_m / (16.0 * finesse(cavity) * math.sqrt(flux))
    efficiency = laser_penalty(laser) / math.sqrt(
        chain.mode_matching_eta * chain.detection_efficiency_eta_ph
    )
    coupling = (
        cavity.input_transmission_T + cavity.round_trip_loss_L
    ) / cavity.input_transmission_T
    rolloff = np.sqrt(1.0 + (f / cavity_bandwidth(cavity)) ** 2)
    floor = base * efficiency * coupling * rolloff
    return float(floor) if floor.ndim == 0 else floor


def shot_noise_psd(
    cavity: OpticalCavity, laser: LaserSource, chain: DetectionChain, frequencies
) -> NoiseSpectrum:
    """shot_noise_floor squared, as a displacement PSD on the given grid."""
    frequencies = np.asarray(frequencies, dtype=float)
    asd = shot_noise_floor(cavity, laser, chain, frequencies)
    return NoiseSpectrum(frequencies, np.square(asd), SpectrumUnit.DISPLACEMENT, label="shot")


def carrier_frequency(laser: LaserSource) -> float:
    return optical_frequency(laser.wavelength_m)


def frequency_modulation_calibration(
    cavity: OpticalCavity, carrier_frequency_hz: float, delta_nu: float
) -> float:
    """
    Displacement equivalent to a laser frequency excursion at lock.

    A length change dx and a frequency change d(nu) shift the resonance
    alike when dx / length = d(nu) / nu.
    """
    if not carrier_frequency_hz > 0:
        raise DomainError(f"carrier frequency must be positive, got {carrier_frequency_hz!r}")
    if abs(delta_nu) > 1e-3 * carrier_frequency_hz:
        logger.warning(
            "frequency excursion %.3g Hz is not small against the carrier %.3g Hz",
            delta_nu,
            carrier_frequency_hz,
        )
    return cavity.length_m * delta_nu / carrier_frequency_hz


def displacement_to_detuning(
    cavity: OpticalCavity, displacement_m, carrier_frequency_hz: float
):
    """Quasi-static detuning produced by a mirror displacement (nu * x / length)."""
    if not carrier_frequency_hz > 0:
        raise DomainError(f"carrier frequency must be positive, got {carrier_frequency_hz!r}")
    return carrier_frequency_hz * np.asarray(displacement_m, dtype=float) / cavity.length_m


def frequency_noise_to_displacement(
    cavity: OpticalCavity,
    carrier_frequency_hz: float,
    s_nu: NoiseSpectrum,
    frequencies: Optional[np.ndarray] = None,
) -> NoiseSpectrum:
    """
    Convert a laser frequency-noise PSD (Hz^2/Hz) to displacement (m^2/Hz).

    Multiplies by (length / nu)^2; optionally resamples the envelope onto
    a new grid (log-log) first.

    Raises:
        UnitMismatchError: If s_nu is not a frequency-noise spectrum
    """
    if s_nu.unit != SpectrumUnit.FREQUENCY:
        raise UnitMismatchError(
            f"expected a {SpectrumUnit.FREQUENCY.value} spectrum, got {s_nu.unit.value}"
        )
    if not carrier_frequency_hz > 0:
        raise DomainError(f"carrier frequency must be positive, got {carrier_frequency_hz!r}")
    if frequencies is not None:
        s_nu = s_nu.resample(frequencies)
    factor = (cavity.length_m / carrier_frequency_hz) ** 2
    return s_nu.scaled(factor, SpectrumUnit.DISPLACEMENT).with_label("frequency")
