"""
Averaged-periodogram PSD estimation.

Hann window (periodic), 50% overlap, density scaling, segment length chosen
so the window's equivalent noise bandwidth (1.5 bins) equals the requested
resolution bandwidth. Long records are processed in blocks of segments and
the block averages are combined with their segment counts as weights, which
gives the same estimate as one scipy.signal.welch call over the record.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np
from scipy.signal import get_window, welch

from ..errors import DomainError
from ..spectra.io import TimeSeries
from ..spectra.spectrum import NoiseSpectrum
from .synthesis import HANN_ENBW_BINS, segment_length

logger = logging.getLogger(__name__)

SEGMENTS_PER_BLOCK = 32
MIN_RECOMMENDED_AVERAGES = 10


def segment_count(n_samples: int, nperseg: int) -> int:
    step = nperseg - nperseg // 2
    if n_samples < nperseg:
        return 0
    return 1 + (n_samples - nperseg) // step


def welch_psd(
    series: TimeSeries,
    resolution_bandwidth: float,
    max_workers: Optional[int] = None,
) -> NoiseSpectrum:
    """
    Welch estimate of the one-sided PSD of a time series.

    Args:
        series: Uniformly sampled record
        resolution_bandwidth: Requested RBW in Hz (equivalent noise bandwidth)
        max_workers: Thread-pool size for the segment blocks

    Returns:
        NoiseSpectrum without the DC bin, carrying the achieved RBW
        (1.5 * fs / nperseg)

    Raises:
        DomainError: If the record is shorter than one segment
    """
    fs = series.sample_rate
    nperseg = segment_length(fs, resolution_bandwidth)
    noverlap = nperseg // 2
    step = nperseg - noverlap
    n_segments = segment_count(len(series), nperseg)
    if n_segments == 0:
        raise DomainError(
            f"record of {len(series)} samples is shorter than one {nperseg}-sample segment "
            f"at RBW {resolution_bandwidth:g} Hz"
        )
    if n_segments < MIN_RECOMMENDED_AVERAGES:
        logger.warning("only %d Welch averages; PSD scatter is large", n_segments)

    window = get_window("hann", nperseg, fftbins=True)
    blocks = []
    for first in range(0, n_segments, SEGMENTS_PER_BLOCK):
        count = min(SEGMENTS_PER_BLOCK, n_segments - first)
        start = first * step
        stop = start + nperseg + (count - 1) * step
        blocks.append((start, stop, count))

    def estimate(block: tuple[int, int, int]) -> np.ndarray:
        start, stop, count = block
        _, pxx = welch(
            series.samples[start:stop],
            fs=fs,
            window=window,
            nperseg=nperseg,
            noverlap=noverlap,
            detrend=False,
            return_onesided=True,
            scaling="density",
            average="mean",
        )
        return pxx * count

    if max_workers and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            partial_sums = list(pool.map(estimate, blocks))
    else:
        partial_sums = [estimate(block) for block in blocks]
    pxx = np.sum(partial_sums, axis=0) / n_segments

    frequencies = np.fft.rfftfreq(nperseg, d=1.0 / fs)
    achieved_rbw = HANN_ENBW_BINS * fs / nperseg
    logger.debug(
        "welch: nperseg=%d, %d averages, RBW %.6g Hz", nperseg, n_segments, achieved_rbw
    )
    return NoiseSpectrum(
        frequencies[1:],
        pxx[1:],
        series.unit,
        resolution_bandwidth=achieved_rbw,
        label="welch",
    )
