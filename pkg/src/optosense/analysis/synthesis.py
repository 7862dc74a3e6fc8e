"""
Gaussian time series with a prescribed one-sided PSD.

Frequency-domain colouring: each rFFT bin 0 < k < N/2 receives a complex
Gaussian amplitude with E|X_k|^2 = S(f_k) * fs * N / 2, DC and Nyquist are
zero, and numpy's irfft returns the record. Parseval then gives a variance
of sum_k S(f_k) * fs / N, the Riemann sum of the PSD.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Optional, TypeVar, Union

import numpy as np

from ..errors import DomainError
from ..spectra.io import TimeSeries
from ..spectra.spectrum import NoiseSpectrum

logger = logging.getLogger(__name__)

PsdModel = Union[NoiseSpectrum, Callable[[np.ndarray], np.ndarray]]
T = TypeVar("T")

# 2**27 float64 samples is 1 GiB.
MAX_SAMPLES = 2**27
HANN_ENBW_BINS = 1.5


def segment_length(sample_rate: float, resolution_bandwidth: float) -> int:
    """Hann segment length whose equivalent noise bandwidth is the requested RBW."""
    if not resolution_bandwidth > 0:
        raise DomainError(f"resolution bandwidth must be positive, got {resolution_bandwidth!r}")
    nperseg = int(round(HANN_ENBW_BINS * sample_rate / resolution_bandwidth))
    if nperseg < 8:
        raise DomainError(
            f"resolution bandwidth {resolution_bandwidth:g} Hz is too coarse for "
            f"fs = {sample_rate:g} Hz"
        )
    return nperseg


def record_length(sample_rate: float, resolution_bandwidth: float, averages: int) -> int:
    """Samples needed for `averages` 50%-overlapping Hann segments at the given RBW."""
    if averages < 1:
        raise DomainError(f"averages must be at least 1, got {averages!r}")
    nperseg = segment_length(sample_rate, resolution_bandwidth)
    step = nperseg - nperseg // 2
    return nperseg + (averages - 1) * step


def synthesis_frequencies(sample_rate: float, n_samples: int) -> np.ndarray:
    """Frequencies of the coloured rFFT bins 1 .. N/2 - 1 (DC and Nyquist excluded)."""
    n_bins = n_samples // 2 + 1
    return np.arange(1, n_bins - 1 if n_samples % 2 == 0 else n_bins) * (sample_rate / n_samples)


def _evaluate_model(model: PsdModel, frequencies: np.ndarray, nyquist: float) -> np.ndarray:
    if isinstance(model, NoiseSpectrum):
        lo, hi = frequencies[0], nyquist
        if model.f_min > lo * (1 + 1e-9) or model.f_max < hi * (1 - 1e-9):
            raise DomainError(
                f"model spectrum [{model.f_min:g}, {model.f_max:g}] Hz must cover "
                f"[{lo:g}, {hi:g}] Hz up to Nyquist"
            )
        return np.interp(frequencies, model.frequencies, model.values)
    values = np.asarray(model(frequencies), dtype=float)
    if values.shape != frequencies.shape:
        raise DomainError("model callable must return one PSD value per frequency")
    if np.any(values < 0) or not np.all(np.isfinite(values)):
        raise DomainError("model PSD must be finite and non-negative")
    return values


def synthesize_timeseries(
    model: PsdModel,
    sample_rate: float,
    duration: float,
    seed: int,
) -> TimeSeries:
    """
    Synthesize a real Gaussian record whose PSD is the model.

    Args:
        model: NoiseSpectrum covering [fs/N, fs/2], or a callable f -> PSD
        sample_rate: Sampling rate in Hz
        duration: Record length in s
        seed: Seed for numpy.random.default_rng

    Returns:
        TimeSeries carrying sample rate and seed

    Raises:
        DomainError: If the model does not reach Nyquist or the record is
            larger than MAX_SAMPLES
    """
    if not sample_rate > 0 or not duration > 0:
        raise DomainError("sample rate and duration must be positive")
    n = int(round(duration * sample_rate))
    if n < 4:
        raise DomainError(f"record of {n} samples is too short to synthesize")
    if n > MAX_SAMPLES:
        raise DomainError(f"record of {n} samples exceeds the {MAX_SAMPLES} sample limit")

    frequencies = synthesis_frequencies(sample_rate, n)
    psd = _evaluate_model(model, frequencies, sample_rate / 2.0)
    rng = np.random.default_rng(seed)

    scale = np.sqrt(psd * (sample_rate * n / 4.0))
    del psd
    bins = np.zeros(n // 2 + 1, dtype=np.complex128)
    coloured = slice(1, 1 + frequencies.size)
    bins.real[coloured] = rng.standard_normal(frequencies.size) * scale
    bins.imag[coloured] = rng.standard_normal(frequencies.size) * scale
    del scale
    samples = np.fft.irfft(bins, n=n)
    logger.debug("synthesized %d samples at %.6g Hz (seed %s)", n, sample_rate, seed)
    return TimeSeries(samples, sample_rate, seed)


def spawn_seeds(seed: int, count: int) -> list[int]:
    """Independent integer seeds derived from one master seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1, dtype=np.uint32)[0]) for child in children]


def run_seed_batch(
    task: Callable[[int], T],
    seed: int,
    count: int,
    max_workers: Optional[int] = None,
) -> list[T]:
    """
    Run task(seed_i) for `count` spawned seeds; results come back in seed order.

    Each task gets its own seed, so the outcome does not depend on
    max_workers or scheduling.
    """
    seeds = spawn_seeds(seed, count)
    if max_workers and count > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(task, seeds))
    return [task(s) for s in seeds]
