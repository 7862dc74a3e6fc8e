"""
Physical constants (CODATA values from scipy.constants) and photon flux.
"""

from dataclasses import dataclass

from scipy import constants as const

from ..errors import DomainError


@dataclass(frozen=True)
class PhysicalConstants:
    """CODATA constants used across the package. Immutable."""
    boltzmann_k: float = const.k  # J/K
    planck_h: float = const.h  # J*s
    light_speed_c: float = const.c  # m/s


CONSTANTS = PhysicalConstants()

K_B = CONSTANTS.boltzmann_k
H_PLANCK = CONSTANTS.planck_h
C_LIGHT = CONSTANTS.light_speed_c


def photon_flux(power: float, wavelength: float) -> float:
    """
    Convert optical power to photon flux.

    Args:
        power: Optical power in W (>= 0)
        wavelength: Vacuum wavelength in m (> 0)

    Returns:
        Photons per second, power * wavelength / (h * c)
    """
    if not wavelength > 0:
        raise DomainError(f"wavelength must be positive, got {wavelength!r} m")
    if power < 0:
        raise DomainError(f"optical power must be non-negative, got {power!r} W")
    return float(power * wavelength / (H_PLANCK * C_LIGHT))


def optical_frequency(wavelength: float) -> float:
    """Carrier frequency c / lambda in Hz."""
    if not wavelength > 0:
        raise DomainError(f"wavelength must be positive, got {wavelength!r} m")
    return float(C_LIGHT / wavelength)
