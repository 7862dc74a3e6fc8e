"""
File formats for spectra, time series and run manifests.

Spectrum CSV:
    # unit=m2/Hz sidedness=one
    frequency_hz,value
    1.000000000000000e+04,2.500000000000000e-37
    ...

Time-series binary: one text line
``sample_rate_hz=<fs> length=<n> seed=<seed>`` followed by n little-endian
float64 samples.
"""

import hashlib
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from ..errors import DomainError, InvariantViolationError, UnitMismatchError
from .spectrum import NoiseSpectrum, SpectrumUnit

logger = logging.getLogger(__name__)

CSV_FLOAT_FORMAT = "%.15e"
SPECTRUM_COLUMNS = "frequency_hz,value"


@dataclass
class TimeSeries:
    """Uniformly sampled displacement record."""
    samples: np.ndarray
    sample_rate: float
    seed: Optional[int] = None
    unit: SpectrumUnit = SpectrumUnit.DISPLACEMENT

    duration: float = field(init=False)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64).reshape(-1)
        if not self.sample_rate > 0:
            raise DomainError(f"sample rate must be positive, got {self.sample_rate!r}")
        self.duration = self.samples.size / self.sample_rate

    def __len__(self) -> int:
        return self.samples.size

    @property
    def nyquist(self) -> float:
        return self.sample_rate / 2.0

    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) / self.sample_rate


def _spectrum_header(unit: SpectrumUnit) -> str:
    return f"# unit={unit.value} sidedness=one"


def write_spectrum_csv(spectrum: NoiseSpectrum, path: str | Path) -> Path:
    """Write a spectrum in the two-column CSV format."""
    path = Path(path)
    data = np.column_stack((spectrum.frequencies, spectrum.values))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(_spectrum_header(spectrum.unit) + "\n")
        f.write(SPECTRUM_COLUMNS + "\n")
        np.savetxt(f, data, fmt=CSV_FLOAT_FORMAT, delimiter=",")
    logger.debug("wrote %s (%d points)", path, len(spectrum))
    return path


def _parse_header(line: str, path: Path) -> dict[str, str]:
    if not line.startswith("#"):
        raise DomainError(f"{path}: missing '# unit=... sidedness=one' header")
    fields = {}
    for token in line[1:].split():
        key, sep, value = token.partition("=")
        if sep:
            fields[key.strip()] = value.strip()
    return fields


def read_spectrum_csv(
    path: str | Path, expected_unit: Optional[SpectrumUnit] = None, label: str = ""
) -> NoiseSpectrum:
    """
    Load a spectrum CSV written by write_spectrum_csv (or by hand).

    Raises:
        FileNotFoundError: If the file does not exist
        DomainError: If the header is malformed or the spectrum is two-sided
        UnitMismatchError: If expected_unit is given and differs
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Spectrum file not found: {path}")

    with open(path, "r", encoding="utf-8") as f:
        header = _parse_header(f.readline().strip(), path)
        columns = f.readline().strip()
        if columns.replace(" ", "") != SPECTRUM_COLUMNS:
            raise DomainError(f"{path}: expected column line '{SPECTRUM_COLUMNS}'")
        data = np.loadtxt(f, delimiter=",", ndmin=2)

    if header.get("sidedness", "one") != "one":
        raise DomainError(f"{path}: only one-sided spectra are supported")
    try:
        unit = SpectrumUnit(header.get("unit", ""))
    except ValueError as exc:
        raise DomainError(f"{path}: unknown unit tag {header.get('unit')!r}") from exc
    if expected_unit is not None and unit != expected_unit:
        raise UnitMismatchError(
            f"{path}: expected {expected_unit.value} spectrum, file holds {unit.value}"
        )
    if data.shape[1] != 2:
        raise DomainError(f"{path}: expected two columns, got {data.shape[1]}")
    try:
        return NoiseSpectrum(data[:, 0], data[:, 1], unit, label=label or path.stem)
    except InvariantViolationError as exc:
        raise InvariantViolationError(f"{path}: {exc}") from exc


def write_timeseries_binary(series: TimeSeries, path: str | Path) -> Path:
    path = Path(path)
    seed = "none" if series.seed is None else str(series.seed)
    header = f"sample_rate_hz={series.sample_rate!r} length={len(series)} seed={seed}\n"
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(series.samples.astype("<f8").tobytes())
    logger.debug("wrote %s (%d samples)", path, len(series))
    return path


def read_timeseries_binary(path: str | Path) -> TimeSeries:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Time series file not found: {path}")
    with open(path, "rb") as f:
        header = f.readline().decode("ascii").split()
        payload = f.read()
    fields = dict(token.split("=", 1) for token in header)
    try:
        sample_rate = float(fields["sample_rate_hz"])
        length = int(fields["length"])
    except (KeyError, ValueError) as exc:
        raise DomainError(f"{path}: malformed time-series header") from exc
    samples = np.frombuffer(payload, dtype="<f8")
    if samples.size != length:
        raise DomainError(f"{path}: header says {length} samples, found {samples.size}")
    seed = None if fields.get("seed", "none") == "none" else int(fields["seed"])
    return TimeSeries(samples.astype(np.float64), sample_rate, seed)


def write_timeseries_csv(series: TimeSeries, path: str | Path) -> Path:
    """Two-column CSV export (time_s, displacement_m) for small records."""
    path = Path(path)
    data = np.column_stack((series.times(), series.samples))
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"# sample_rate_hz={series.sample_rate!r} seed={series.seed}\n")
        f.write("time_s,displacement_m\n")
        np.savetxt(f, data, fmt=CSV_FLOAT_FORMAT, delimiter=",")
    return path


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_dir: str | Path, files: Iterable[str | Path]) -> Path:
    """
    Write manifest.txt listing every file with its size and SHA-256.

    Rows are sorted by file name so identical outputs give identical
    manifests.
    """
    out_dir = Path(out_dir)
    rows = []
    for name in sorted({Path(p).name for p in files}):
        target = out_dir / name
        rows.append(f"{name},{target.stat().st_size},{file_sha256(target)}")
    manifest = out_dir / "manifest.txt"
    with open(manifest, "w", encoding="utf-8", newline="\n") as f:
        f.write("file,bytes,sha256\n")
        for row in rows:
            f.write(row + "\n")
    return manifest
