"""
The predicted limit measure rho = (1/2pi) Laplacian of max_k U_k.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from grid import GridField, GridSpec
from zeros.measures import Atomic, RootMeasure

logger = logging.getLogger(__name__)

# Default grid spacing and the margin added around supports.
DEFAULT_H: float = 0.01
DEFAULT_MARGIN: float = 2.0


class SupportNotCovered(ValueError):
    """
    The grid rectangle does not contain the support of the test function.
    """


@dataclass(frozen=True)
class BumpFunction:
    """
    phi(z) = amplitude * exp(-1 / (1 - t)) with t = |z - center|^2 / radius^2, zero for t >= 1.
    """
    center: complex
    radius: float
    amplitude: float = 1.0

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError("Invalid bump radius.")
        object.__setattr__(self, "center", complex(self.center))

    def _t(self, z: complex | np.ndarray) -> np.ndarray:
        d = np.asarray(z, dtype=np.complex128) - self.center
        return (d.real ** 2 + d.imag ** 2) / self.radius ** 2

    def __call__(self, z: complex | np.ndarray) -> np.ndarray | float:
        t = self._t(z)
        s = np.where(t < 1.0, 1.0 - t, 1.0)
        return np.where(t < 1.0, self.amplitude * np.exp(-1.0 / s), 0.0)[()]

    def laplacian(self, z: complex | np.ndarray) -> np.ndarray | float:
        """
        Closed form: (4 A / R^2) e^(-1/s) (t - 2ts - s^2) / s^4 with s = 1 - t.
        """
        t = self._t(z)
        inside = t < 1.0
        s = np.where(inside, 1.0 - t, 1.0)
        value = 4.0 * self.amplitude / self.radius ** 2 * np.exp(-1.0 / s) * (t - 2.0 * t * s - s * s) / s ** 4
        return np.where(inside, value, 0.0)[()]

    @property
    def peak(self) -> float:
        return self.amplitude * math.exp(-1.0)


def around(phi: BumpFunction, h: float) -> GridSpec:
    """
    The bump's bounding box with a margin of 2h, aligned so cell edges fall on multiples of h.
    """
    lo_x = math.floor((phi.center.real - phi.radius) / h) * h - 2 * h
    hi_x = math.ceil((phi.center.real + phi.radius) / h) * h + 2 * h
    lo_y = math.floor((phi.center.imag - phi.radius) / h) * h - 2 * h
    hi_y = math.ceil((phi.center.imag + phi.radius) / h) * h + 2 * h
    return GridSpec(lo_x, hi_x, lo_y, hi_y, h)


def covering(measures: Sequence[RootMeasure], h: float = DEFAULT_H, margin: float = DEFAULT_MARGIN) -> GridSpec:
    """
    The square around the origin holding every support, inflated by `margin`.
    """
    half = max(m.support_radius for m in measures) + margin
    half = math.ceil(half / h) * h
    return GridSpec.square(half, h)


def max_potential(measures: Sequence[RootMeasure], z: complex | np.ndarray) -> np.ndarray | float:
    if len(measures) == 0:
        raise ValueError("Invalid measure list: empty.")
    values = [np.asarray(m.potential(z), dtype=float) for m in measures]
    return np.maximum.reduce(values)[()]


def weak_integral(measures: Sequence[RootMeasure], phi: BumpFunction, grid: GridSpec | None = None) -> float:
    """
    Midpoint rule for (1/2pi) ∫ Δphi(z) max_k U_k(z) dλ(z).

    Only cells inside the bump's bounding box are evaluated; cells where
    the maximum is -inf are excluded.
    """
    if grid is None:
        grid = around(phi, DEFAULT_H)
    if not grid.contains_disk(phi.center, phi.radius, margin=2 * grid.h):
        raise SupportNotCovered("The grid does not cover the support of the test function.")

    xs, ys = grid.xs(), grid.ys()
    keep_x = np.abs(xs - phi.center.real) < phi.radius + grid.h
    keep_y = np.abs(ys - phi.center.imag) < phi.radius + grid.h
    z = xs[keep_x][:, None] + 1j * ys[keep_y][None, :]
    lap = np.asarray(phi.laplacian(z))
    support = lap != 0.0
    u = np.asarray(max_potential(measures, z[support]))
    finite = np.isfinite(u)
    if not np.all(finite):
        logger.debug("Excluding %d cell(s) at atoms from the weak integral.", int((~finite).sum()))
    terms = lap[support][finite] * u[finite]
    return math.fsum(terms.tolist()) * grid.cell_area / (2.0 * math.pi)


def grid_density(measures: Sequence[RootMeasure], grid: GridSpec | None = None) -> GridField:
    """
    Cell masses (1/2pi) * (5-point Laplacian of U) * h^2 from closed-form potentials.

    Cells whose stencil touches a -inf potential are masked.
    """
    if grid is None:
        grid = covering(measures)
    logger.debug("Grid density on %dx%d cells (h=%g).", grid.width, grid.height, grid.h)
    u = np.asarray(max_potential(measures, grid.centers(pad=1)), dtype=float)
    bad = ~np.isfinite(u)
    with np.errstate(invalid="ignore"):
        stencil = u[2:, 1:-1] + u[:-2, 1:-1] + u[1:-1, 2:] + u[1:-1, :-2] - 4.0 * u[1:-1, 1:-1]
    mask = bad[1:-1, 1:-1] | bad[2:, 1:-1] | bad[:-2, 1:-1] | bad[1:-1, 2:] | bad[1:-1, :-2]
    return GridField(grid, np.where(mask, 0.0, stencil) / (2.0 * math.pi), mask)


def enclosed_mass(measures: Sequence[RootMeasure], half_width: float, h: float = DEFAULT_H,
                  center: complex = 0j) -> float:
    """
    Mass of rho inside a square, as the outward discrete flux of U across its boundary.

    Equals the total of grid_density over the same square, at a cost of
    O(half_width / h) potential evaluations.
    """
    grid = GridSpec.square(half_width, h, center)
    xs, ys = grid.xs(), grid.ys()
    x_lo, x_hi = grid.x_min, grid.x_min + grid.width * h
    y_lo, y_hi = grid.y_min, grid.y_min + grid.height * h

    def flux(inner: np.ndarray, outer: np.ndarray) -> float:
        diff = np.asarray(max_potential(measures, outer)) - np.asarray(max_potential(measures, inner))
        return math.fsum(diff.tolist())

    total = flux(x_lo + h / 2 + 1j * ys, x_lo - h / 2 + 1j * ys)
    total += flux(x_hi - h / 2 + 1j * ys, x_hi + h / 2 + 1j * ys)
    total += flux(xs + 1j * (y_lo + h / 2), xs + 1j * (y_lo - h / 2))
    total += flux(xs + 1j * (y_hi - h / 2), xs + 1j * (y_hi + h / 2))
    return total / (2.0 * math.pi)


def cauchy_reference(phi: BumpFunction) -> float:
    """
    (1/pi) ∫ phi(iy) / (1 + y^2) dy, the integral of phi against the
    standard Cauchy law on the imaginary axis.
    """
    a = phi.center.real
    if abs(a) >= phi.radius:
        return 0.0
    half = math.sqrt(phi.radius ** 2 - a * a)
    lo, hi = phi.center.imag - half, phi.center.imag + half

    def integrand(y: float) -> float:
        return float(phi(1j * y)) / (1.0 + y * y)

    value, _ = integrate.quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200,
                              points=[phi.center.imag])
    return value / math.pi


# The two four-point measures whose limit lives on the lines x + y = 0 and x - y = 0.
LINES_MEASURES: tuple[RootMeasure, ...] = (Atomic.uniform([1, -1]), Atomic.uniform([1j, -1j]))


def lines_reference(phi: BumpFunction, h: float = 0.0025) -> float:
    """
    ∫ phi drho for rho = (1/2pi) Δ max(U_{±1}, U_{±i}), by a fine-grid weak integral.
    """
    return weak_integral(LINES_MEASURES, phi, around(phi, h))
