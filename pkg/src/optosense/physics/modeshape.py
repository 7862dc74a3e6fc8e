"""
Mode shapes and the spot-position dependence of the effective mass.

The resonator is described by a displacement profile u(x, y) sampled on a
regular lattice and normalized to max|u| = 1. The effective mass seen by an
optical spot with normalized Gaussian intensity weight w is

    m_eff = (integral of rho * u^2 dA) / (integral of u * w dA)^2

so it approaches the modal mass at an antinode and diverges on a node.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import brentq

from ..errors import DomainError, EdgeTruncationWarning, InvariantViolationError
from ..models.parameters import OpticalSpot
from ..models.results import ScanPoint

logger = logging.getLogger(__name__)

MAX_CLAMPED_MODE = 10
MIN_CAPTURED_FRACTION = 0.99
NODE_TOLERANCE = 1e-9


def clamped_beam_root(n: int) -> float:
    """
    n-th positive root of cos(z) * cosh(z) = 1 (4.7300, 7.8532, ...).

    Raises:
        DomainError: For n outside 1..10
    """
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_CLAMPED_MODE:
        raise DomainError(f"mode index must be an integer in 1..{MAX_CLAMPED_MODE}, got {n!r}")
    center = (n + 0.5) * math.pi
    # cos z - 1/cosh z has the same roots and stays bounded
    return float(
        brentq(
            lambda z: math.cos(z) - 1.0 / math.cosh(z),
            center - math.pi / 4,
            center + math.pi / 4,
            xtol=1e-14,
        )
    )


def clamped_beam_profile(n: int, x, length: float, derivative: bool = False) -> np.ndarray:
    """
    Euler-Bernoulli clamped-clamped eigenfunction (not normalized).

    u(x) = cosh(bx) - cos(bx) - s * (sinh(bx) - sin(bx))

    The hyperbolic part is evaluated as exponentials scaled by e^{-bL} so
    high modes keep full precision.

    Args:
        n: Mode index 1..10
        x: Positions along the beam in m
        length: Beam length in m
        derivative: Return du/dx instead of u
    """
    if not length > 0:
        raise DomainError(f"beam length must be positive, got {length!r}")
    lam = clamped_beam_root(n)
    beta = lam / length
    z = beta * np.asarray(x, dtype=float)

    scaled_denominator = 0.5 * (1.0 - math.exp(-2.0 * lam)) - math.sin(lam) * math.exp(-lam)
    one_minus_sigma_scaled = (math.cos(lam) - math.sin(lam) - math.exp(-lam)) / scaled_denominator
    one_minus_sigma = one_minus_sigma_scaled * math.exp(-lam)
    sigma = 1.0 - one_minus_sigma
    one_plus_sigma = 2.0 - one_minus_sigma

    growing = np.exp(z - lam) * one_minus_sigma_scaled
    decaying = np.exp(-z) * one_plus_sigma
    if derivative:
        return beta * (0.5 * (growing - decaying) + np.sin(z) + sigma * np.cos(z))
    return 0.5 * (growing + decaying) - np.cos(z) + sigma * np.sin(z)


@dataclass(frozen=True, eq=False)
class ModeShape:
    """
    Displacement profile on a regular lattice.

    amplitudes has shape (len(y), len(x)); areal_density is thickness times
    material density in kg/m^2.
    """
    x: np.ndarray
    y: np.ndarray
    amplitudes: np.ndarray
    areal_density: float
    label: str = ""
    normalize: bool = True

    def __post_init__(self):
        x = np.array(self.x, dtype=float).reshape(-1)
        y = np.array(self.y, dtype=float).reshape(-1)
        amplitudes = np.array(self.amplitudes, dtype=float)
        for name, axis in (("x", x), ("y", y)):
            if axis.size < 2:
                raise InvariantViolationError(f"mode-shape {name} axis needs two points")
            steps = np.diff(axis)
            if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-6):
                raise InvariantViolationError(f"mode-shape {name} axis must be a regular lattice")
        if amplitudes.shape != (y.size, x.size):
            raise InvariantViolationError(
                f"amplitudes shape {amplitudes.shape} does not match grid ({y.size}, {x.size})"
            )
        if not self.areal_density > 0:
            raise InvariantViolationError("areal density must be positive")
        peak = np.max(np.abs(amplitudes))
        if peak == 0 or not np.isfinite(peak):
            raise InvariantViolationError("mode shape has no finite non-zero amplitude")
        if self.normalize:
            amplitudes = amplitudes / peak
        for name, arr in (("x", x), ("y", y), ("amplitudes", amplitudes)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def extent(self) -> tuple[float, float, float, float]:
        return float(self.x[0]), float(self.x[-1]), float(self.y[0]), float(self.y[-1])

    def modal_mass(self) -> float:
        """Integral of rho * u^2 over the surface."""
        inner = trapezoid(self.amplitudes**2, self.y, axis=0)
        return float(self.areal_density * trapezoid(inner, self.x))

    def contains(self, x: float, y: float) -> bool:
        x0, x1, y0, y1 = self.extent
        return x0 <= x <= x1 and y0 <= y <= y1


def clamped_beam_mode_shape(
    mode_index: int,
    beam_length: float,
    beam_width: Optional[float] = None,
    areal_density: float = 0.1398,
    nx: int = 401,
    ny: int = 41,
) -> ModeShape:
    """
    Clamped-clamped beam profile along x, extruded uniformly across y.

    Args:
        mode_index: 1..10
        beam_length: Length between the clamps in m
        beam_width: Extent across the beam in m (defaults to the length)
        areal_density: kg/m^2
        nx, ny: Lattice points along and across the beam
    """
    if nx < 3 or ny < 2:
        raise DomainError("mode-shape lattice needs at least 3 x 2 points")
    width = beam_length if beam_width is None else beam_width
    x = np.linspace(0.0, beam_length, nx)
    y = np.linspace(0.0, width, ny)
    profile = clamped_beam_profile(mode_index, x, beam_length)
    amplitudes = np.tile(profile, (ny, 1))
    return ModeShape(x, y, amplitudes, areal_density, label=f"clamped_{mode_index}")


def mode_shape_from_grid_file(path: str | Path) -> ModeShape:
    """
    Import a mode shape exported on a regular lattice (e.g. from FEM).

    Format: a header line ``# areal_density_kg_m2=<value>``, a column line
    ``x_m,y_m,u`` and one row per lattice point in any order.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Mode-shape file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        columns = f.readline().strip().replace(" ", "")
        data = np.loadtxt(f, delimiter=",", ndmin=2)
    key, _, value = header.lstrip("#").strip().partition("=")
    if key.strip() != "areal_density_kg_m2" or not value:
        raise DomainError(f"{path}: expected '# areal_density_kg_m2=<value>' header")
    if columns != "x_m,y_m,u" or data.shape[1] != 3:
        raise DomainError(f"{path}: expected columns x_m,y_m,u")
    xs = np.unique(data[:, 0])
    ys = np.unique(data[:, 1])
    if xs.size * ys.size != data.shape[0]:
        raise DomainError(
            f"{path}: {data.shape[0]} rows do not form a {ys.size} x {xs.size} lattice"
        )
    order = np.lexsort((data[:, 0], data[:, 1]))
    amplitudes = data[order, 2].reshape(ys.size, xs.size)
    return ModeShape(xs, ys, amplitudes, float(value), label=path.stem)


def _gaussian_axis(axis: np.ndarray, center: float, waist: float) -> np.ndarray:
    return np.exp(-2.0 * (axis - center) ** 2 / waist**2)


def spot_overlap(shape: ModeShape, spot: OpticalSpot) -> tuple[float, float, float]:
    """
    Returns:
        (integral of u*w, integral of |u|*w, captured fraction of w)
    """
    norm = 2.0 / (math.pi * spot.waist_m**2)
    wx = _gaussian_axis(shape.x, spot.center_x_m, spot.waist_m)
    wy = _gaussian_axis(shape.y, spot.center_y_m, spot.waist_m)
    weighted = shape.amplitudes * wy[:, None]
    overlap = norm * trapezoid(trapezoid(weighted, shape.y, axis=0) * wx, shape.x)
    magnitude = norm * trapezoid(trapezoid(np.abs(weighted), shape.y, axis=0) * wx, shape.x)
    captured = norm * trapezoid(wx, shape.x) * trapezoid(wy, shape.y)
    return float(overlap), float(magnitude), float(captured)


def _mass_from_overlap(modal_mass: float, overlap: float, magnitude: float) -> float:
    if abs(overlap) <= NODE_TOLERANCE * magnitude or overlap == 0.0:
        return math.inf
    return modal_mass / overlap**2


def effective_mass_at_spot(shape: ModeShape, spot: OpticalSpot) -> float:
    """
    Effective mass probed by a Gaussian spot.

    Returns math.inf when the spot sits on a node (zero overlap).

    Raises:
        DomainError: If the spot center lies outside the lattice
    Warns:
        EdgeTruncationWarning: If less than 99% of the spot falls on the lattice
    """
    if not shape.contains(spot.center_x_m, spot.center_y_m):
        raise DomainError(
            f"spot center ({spot.center_x_m:g}, {spot.center_y_m:g}) m is outside the mode shape"
        )
    overlap, magnitude, captured = spot_overlap(shape, spot)
    if captured < MIN_CAPTURED_FRACTION:
        warnings.warn(
            EdgeTruncationWarning(
                f"only {captured:.3f} of the spot intensity falls on the resonator", captured
            ),
            stacklevel=2,
        )
    return _mass_from_overlap(shape.modal_mass(), overlap, magnitude)


def overlap_scan(
    shape: ModeShape,
    waist: float,
    positions: Iterable[float],
    scan_y: Optional[float] = None,
) -> list[ScanPoint]:
    """
    Relative thermal noise level along a lateral scan of the spot.

    The thermal ASD at resonance scales as 1/sqrt(m_eff), i.e. as
    |integral u*w| / sqrt(integral rho*u^2); levels are normalized to the
    scan maximum.

    Args:
        shape: Mode shape
        waist: Spot waist in m
        positions: x positions of the spot center
        scan_y: y of the scan line (defaults to the lattice center)

    Raises:
        DomainError: On an empty or out-of-range list of positions
    """
    positions = [float(p) for p in positions]
    if not positions:
        raise DomainError("overlap scan needs at least one position")
    x0, x1, y0, y1 = shape.extent
    y_line = 0.5 * (y0 + y1) if scan_y is None else float(scan_y)
    if any(not shape.contains(p, y_line) for p in positions):
        raise DomainError(f"scan positions must lie within the resonator [{x0:g}, {x1:g}] m")

    modal_mass = shape.modal_mass()
    raw = []
    for position in positions:
        spot = OpticalSpot(center_x_m=position, center_y_m=y_line, waist_m=waist)
        overlap, magnitude, captured = spot_overlap(shape, spot)
        raw.append((position, overlap, magnitude, captured))

    levels = np.array([abs(o) for _, o, _, _ in raw]) / math.sqrt(modal_mass)
    peak = levels.max()
    if peak == 0:
        raise DomainError("the spot never overlaps the mode along this scan")
    lowest_capture = min(c for *_, c in raw)
    if lowest_capture < MIN_CAPTURED_FRACTION:
        warnings.warn(
            EdgeTruncationWarning(
                f"scan reaches the resonator edge (captured fraction down to {lowest_capture:.3f})",
                lowest_capture,
            ),
            stacklevel=2,
        )
    logger.debug("overlap scan over %d positions, peak level %.4g", len(positions), peak)
    return [
        ScanPoint(
            position_m=position,
            relative_level=float(level / peak),
            effective_mass_kg=_mass_from_overlap(modal_mass, overlap, magnitude),
            captured_fraction=captured,
        )
        for (position, overlap, magnitude, captured), level in zip(raw, levels)
    ]
