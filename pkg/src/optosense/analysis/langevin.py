"""
Time-domain Langevin integration of one mechanical mode.

Semi-implicit Euler-Maruyama on m (x'' + gamma x' + Omega_m^2 x) = F_th:

    v[n+1] = v[n] - dt (gamma v[n] + Omega_m^2 x[n]) + sqrt(S_F dt / 2) / m * xi[n]
    x[n+1] = x[n] + dt v[n+1]

Eliminating v leaves a two-pole recursion in x, which scipy.signal.lfilter
runs over the whole record at once.
"""

import logging
import math
import warnings
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from ..errors import AccuracyWarning, DomainError
from ..models.parameters import Environment, MechanicalMode
from ..physics.mechanics import thermal_force_psd
from ..spectra.io import TimeSeries

logger = logging.getLogger(__name__)

MIN_STEPS_PER_PERIOD = 100
BURN_IN_DAMPING_TIMES = 10.0


def langevin_coefficients(
    mode: MechanicalMode, env: Environment, sample_rate: float
) -> tuple[np.ndarray, np.ndarray]:
    """(b, a) filter coefficients mapping unit white noise to displacement."""
    dt = 1.0 / sample_rate
    gamma = mode.damping_rate
    omega2 = mode.angular_frequency**2
    kick = math.sqrt(thermal_force_psd(mode, env) * dt / 2.0) / mode.effective_mass_kg
    b = np.array([0.0, kick * dt])
    a = np.array([1.0, -2.0 + gamma * dt + omega2 * dt**2, 1.0 - gamma * dt])
    return b, a


def integrate_langevin(
    mode: MechanicalMode,
    env: Environment,
    sample_rate: float,
    n_samples: int,
    seed: int,
    burn_in: Optional[int] = None,
) -> TimeSeries:
    """
    Thermal displacement record of one mode from the stochastic equation of motion.

    Args:
        mode: Oscillator parameters
        env: Bath temperature
        sample_rate: Integration rate in Hz; at least 100 f_m is recommended
        n_samples: Samples kept after the burn-in
        seed: Seed for numpy.random.default_rng
        burn_in: Discarded start-up samples (default: 10 damping times)

    Returns:
        TimeSeries in metres

    Raises:
        DomainError: Non-positive sample count or a rate at which the scheme is unstable
    """
    if n_samples < 1:
        raise DomainError(f"n_samples must be positive, got {n_samples!r}")
    steps_per_period = sample_rate / mode.resonance_frequency_hz
    if steps_per_period <= 2.0:
        raise DomainError(f"sample rate {sample_rate:g} Hz cannot resolve the resonance")
    if steps_per_period < MIN_STEPS_PER_PERIOD:
        message = (
            f"{steps_per_period:.1f} steps per period; the integrated PSD is biased "
            f"below {MIN_STEPS_PER_PERIOD}"
        )
        logger.warning(message)
        warnings.warn(AccuracyWarning(message), stacklevel=2)
    if burn_in is None:
        burn_in = int(math.ceil(BURN_IN_DAMPING_TIMES * sample_rate / mode.damping_rate))

    b, a = langevin_coefficients(mode, env, sample_rate)
    rng = np.random.default_rng(seed)
    drive = rng.standard_normal(burn_in + n_samples)
    samples = lfilter(b, a, drive)[burn_in:]
    logger.debug(
        "langevin: %d samples (+%d burn-in) at %.6g Hz, seed %s",
        n_samples,
        burn_in,
        sample_rate,
        seed,
    )
    return TimeSeries(samples, sample_rate, seed)
