"""
Resonance fitting on displacement PSDs.

The fit model is background + peak / (1 + 4 (f - f0)^2 / FWHM^2), or the
exact |chi|^2 shape for low-Q modes. When the spectrum carries an RBW, the
Hann window's spectral response is convolved into the model, so a line only
a few bins wide is not broadened by the estimator.
"""

import logging
import math
import warnings
from typing import Callable, Literal, Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import OptimizeWarning, curve_fit
from scipy.signal import find_peaks

from ..errors import AmbiguousFitError, DiagnosticError, DomainError, FitError, ResolutionWarning
from ..models.parameters import Environment
from ..models.results import LorentzianFit
from ..spectra.constants import K_B
from ..spectra.spectrum import NoiseSpectrum, SpectrumUnit
from .synthesis import HANN_ENBW_BINS

logger = logging.getLogger(__name__)

FitModel = Literal["lorentzian", "exact"]

MIN_POINTS_PER_LINEWIDTH = 20
MIN_WINDOW_POINTS = 8
MAX_FUNCTION_EVALUATIONS = 2000
# Peak must clear the window median by this many robust standard deviations.
DETECTION_SIGMAS = 6.0
PEAK_PROMINENCE = 0.3
KERNEL_HALF_WIDTH_BINS = 6.0
KERNEL_TAPS = 193


def lorentzian(f, center, fwhm, peak, background):
    return background + peak / (1.0 + 4.0 * ((f - center) / fwhm) ** 2)


def exact_lineshape(f, center, fwhm, peak, background):
    """|chi|^2 shape scaled to `peak` at f = center, FWHM ~ center / Q."""
    return background + peak * (fwhm * center) ** 2 / (
        (center**2 - f**2) ** 2 + (fwhm * f) ** 2
    )


def hann_response_kernel() -> tuple[np.ndarray, np.ndarray]:
    """
    Offsets (in bins) and normalized weights of the squared Hann spectral window.

    Returns:
        (u, weights) with u on [-6, 6] bins
    """
    u = np.linspace(-KERNEL_HALF_WIDTH_BINS, KERNEL_HALF_WIDTH_BINS, KERNEL_TAPS)
    response = (0.5 * np.sinc(u) + 0.25 * (np.sinc(u - 1.0) + np.sinc(u + 1.0))) ** 2
    return u, response / response.sum()


def _smooth(values: np.ndarray, width: int = 5) -> np.ndarray:
    width = min(width, values.size)
    if width < 2:
        return values.copy()
    padded = np.pad(values, width // 2, mode="edge")
    smoothed = np.convolve(padded, np.ones(width) / width, mode="valid")
    return smoothed[: values.size]


def _half_power_width(f: np.ndarray, smoothed: np.ndarray, index: int, background: float) -> float:
    half = background + 0.5 * (smoothed[index] - background)
    left = index
    while left > 0 and smoothed[left] > half:
        left -= 1
    right = index
    while right < smoothed.size - 1 and smoothed[right] > half:
        right += 1

    def crossing(a: int, b: int) -> float:
        ya, yb = smoothed[a], smoothed[b]
        if ya == yb:
            return float(f[a])
        return float(f[a] + (half - ya) * (f[b] - f[a]) / (yb - ya))

    f_left = crossing(left, left + 1) if smoothed[left] <= half else float(f[0])
    f_right = crossing(right - 1, right) if smoothed[right] <= half else float(f[-1])
    return f_right - f_left


def _window_slice(spectrum: NoiseSpectrum, window: tuple[float, float]):
    f_lo, f_hi = float(window[0]), float(window[1])
    if not f_hi > f_lo:
        raise DomainError(f"fit window [{f_lo:g}, {f_hi:g}] Hz is empty")
    if f_lo < spectrum.f_min or f_hi > spectrum.f_max:
        raise DomainError(
            f"fit window [{f_lo:g}, {f_hi:g}] Hz leaves the spectrum span "
            f"[{spectrum.f_min:g}, {spectrum.f_max:g}] Hz"
        )
    mask = (spectrum.frequencies >= f_lo) & (spectrum.frequencies <= f_hi)
    if np.count_nonzero(mask) < MIN_WINDOW_POINTS:
        raise DomainError(f"fit window holds fewer than {MIN_WINDOW_POINTS} points")
    return spectrum.frequencies[mask], spectrum.values[mask], f_lo, f_hi


def _initial_guess(f: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float]:
    """Deterministic start: argmax, half-power points and a low-quantile background."""
    median = float(np.median(y))
    spread = 1.4826 * float(np.median(np.abs(y - median)))
    if float(y.max()) - median <= DETECTION_SIGMAS * spread:
        raise FitError("no resonance stands out of the fit window")

    smoothed = _smooth(y)
    lowest = np.sort(y)[: max(1, y.size // 10)]
    background = float(np.median(lowest))
    index = int(np.argmax(smoothed))
    df = float(np.median(np.diff(f)))
    fwhm = max(_half_power_width(f, smoothed, index, background), df)

    height = float(smoothed[index]) - background
    peaks, _ = find_peaks(
        smoothed,
        prominence=PEAK_PROMINENCE * height,
        distance=max(1, int(round(fwhm / df))),
    )
    if len(peaks) > 1:
        raise AmbiguousFitError(
            f"{len(peaks)} resonances in the fit window at "
            + ", ".join(f"{f[p]:.6g}" for p in peaks)
            + " Hz"
        )
    if len(peaks) == 0:
        raise FitError("the largest value sits on the window edge, not on a resonance")
    index = int(peaks[0])
    return float(f[index]), fwhm, float(y[index]) - background, background


def _build_model(
    shape: Callable, f0_init: float, fwhm_init: float, bin_width: Optional[float]
) -> Callable:
    """Model in normalized parameters (offset, width in initial FWHMs, peak, background)."""
    if bin_width is None:
        offsets = np.zeros(1)
        weights = np.ones(1)
    else:
        u, weights = hann_response_kernel()
        offsets = u * bin_width

    def model(f, shift, width, peak, background):
        center = f0_init + shift * fwhm_init
        sampled = np.asarray(f, dtype=float)[:, None] - offsets[None, :]
        line = shape(sampled, center, width * fwhm_init, peak, 0.0)
        return line @ weights + background

    return model


def fit_lorentzian(
    spectrum: NoiseSpectrum,
    window: tuple[float, float],
    env: Optional[Environment] = None,
    model: FitModel = "lorentzian",
) -> LorentzianFit:
    """
    Fit one resonance inside a frequency window.

    Args:
        spectrum: Displacement PSD (m^2/Hz)
        window: (f_lo, f_hi) in Hz, holding exactly one resonance
        env: Bath temperature used to derive m_eff (default 300 K)
        model: 'lorentzian' or 'exact' (|chi|^2 shape)

    Returns:
        LorentzianFit with derived Q, area and m_eff

    Raises:
        DomainError: Window empty or outside the spectrum
        FitError: Flat window or no convergence (carries residual_norm)
        AmbiguousFitError: More than one resonance in the window
    """
    if spectrum.unit != SpectrumUnit.DISPLACEMENT:
        raise DomainError("resonance fits need a displacement spectrum")
    if model not in ("lorentzian", "exact"):
        raise DomainError(f"unknown fit model {model!r}")
    env = env or Environment()
    f, y, f_lo, f_hi = _window_slice(spectrum, window)
    f0_init, fwhm_init, peak_init, background_init = _initial_guess(f, y)
    scale = max(peak_init, 1e-300)
    logger.debug(
        "fit start: f0 %.8g Hz, FWHM %.4g Hz, peak %.4g, background %.4g",
        f0_init,
        fwhm_init,
        peak_init,
        background_init,
    )

    shape = lorentzian if model == "lorentzian" else exact_lineshape
    rbw = spectrum.resolution_bandwidth
    bin_width = rbw / HANN_ENBW_BINS if rbw else None
    fit_model = _build_model(shape, f0_init, fwhm_init, bin_width)

    y_norm = y / scale
    p0 = [0.0, 1.0, 1.0, background_init / scale]
    lower = [(f_lo - f0_init) / fwhm_init, 1e-6, 0.0, -np.inf]
    upper = [(f_hi - f0_init) / fwhm_init, 10.0 * (f_hi - f_lo) / fwhm_init, np.inf, np.inf]
    residual_norm = float(np.sqrt(np.mean((fit_model(f, *p0) - y_norm) ** 2)))
    nfev = 0
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, _, info, _, _ = curve_fit(
                fit_model,
                f,
                y_norm,
                p0=p0,
                bounds=(lower, upper),
                method="trf",
                max_nfev=MAX_FUNCTION_EVALUATIONS,
                full_output=True,
            )
            nfev += int(info.get("nfev", 0))
            residual_norm = float(np.sqrt(np.mean((fit_model(f, *popt) - y_norm) ** 2)))
            sigma = np.maximum(fit_model(f, *popt), 1e-12 * float(np.max(y_norm)))
            popt, pcov, info, _, _ = curve_fit(
                fit_model,
                f,
                y_norm,
                p0=np.clip(popt, lower, upper),
                sigma=sigma,
                bounds=(lower, upper),
                method="trf",
                max_nfev=MAX_FUNCTION_EVALUATIONS,
                full_output=True,
            )
            nfev += int(info.get("nfev", 0))
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"fit did not converge: {exc}", residual_norm=residual_norm) from exc

    fitted = fit_model(f, *popt)
    weighted = (y_norm - fitted) / np.maximum(np.abs(fitted), 1e-300)
    residual_norm = float(np.sqrt(np.mean(weighted**2)))
    with np.errstate(invalid="ignore"):
        errors = np.sqrt(np.diag(pcov))

    center = f0_init + popt[0] * fwhm_init
    fwhm = popt[1] * fwhm_init
    peak = popt[2] * scale
    background = popt[3] * scale
    if not f_lo < center < f_hi or not fwhm > 0 or not peak > 0:
        raise FitError(
            f"fit converged to an unphysical line (f0 {center:g} Hz, FWHM {fwhm:g} Hz)",
            residual_norm=residual_norm,
        )

    area = peak * math.pi * fwhm / 2.0
    omega = 2.0 * math.pi * center
    points = fwhm / float(np.median(np.diff(f)))
    if points < MIN_POINTS_PER_LINEWIDTH:
        message = (
            f"linewidth {fwhm:.4g} Hz is sampled by {points:.1f} points "
            f"(recommended {MIN_POINTS_PER_LINEWIDTH})"
        )
        logger.warning(message)
        warnings.warn(ResolutionWarning(message), stacklevel=2)

    fit = LorentzianFit(
        center_frequency_hz=center,
        linewidth_hz=fwhm,
        peak_psd=peak,
        background_psd=background,
        quality_factor=center / fwhm,
        area_m2=area,
        effective_mass_kg=K_B * env.temperature_k / (omega**2 * area),
        temperature_k=env.temperature_k,
        model=model,
        window_lo_hz=f_lo,
        window_hi_hz=f_hi,
        center_stderr_hz=float(errors[0] * fwhm_init),
        linewidth_stderr_hz=float(errors[1] * fwhm_init),
        peak_stderr=float(errors[2] * scale),
        background_stderr=float(errors[3] * scale),
        residual_norm=residual_norm,
        points_per_linewidth=points,
        kernel_applied=bin_width is not None,
        n_function_evaluations=nfev,
    )
    logger.info(
        "fit: f0 %.8g Hz, Q %.5g, m_eff %.4g kg (%d evaluations)",
        fit.center_frequency_hz,
        fit.quality_factor,
        fit.effective_mass_kg,
        nfev,
    )
    return fit


def _tail_area(fit: LorentzianFit) -> float:
    """Area of the fitted line outside its window."""
    half = fit.linewidth_hz / 2.0
    upper = math.pi / 2.0 - math.atan((fit.window_hi_hz - fit.center_frequency_hz) / half)
    lower = math.pi / 2.0 - math.atan((fit.center_frequency_hz - fit.window_lo_hz) / half)
    return fit.peak_psd * half * (upper + lower)


def equipartition_temperature(
    spectrum: NoiseSpectrum, fit: LorentzianFit, known_m_eff: float
) -> float:
    """
    Effective temperature from the background-subtracted peak area.

    T = m_eff * (2 pi f0)^2 * area / k_B, with the area taken as the in-window
    trapezoid of (S - background) plus the fitted line's tails outside it.

    Raises:
        DomainError: Non-positive mass
        DiagnosticError: Area is not positive after background subtraction
    """
    if not known_m_eff > 0:
        raise DomainError(f"effective mass must be positive, got {known_m_eff!r}")
    f, y, _, _ = _window_slice(spectrum, (fit.window_lo_hz, fit.window_hi_hz))
    area = float(trapezoid(y - fit.background_psd, f)) + _tail_area(fit)
    if not area > 0:
        raise DiagnosticError(
            f"background-subtracted peak area is {area:.4g} m^2; background over-estimated"
        )
    omega = 2.0 * math.pi * fit.center_frequency_hz
    return known_m_eff * omega**2 * area / K_B
