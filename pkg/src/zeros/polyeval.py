"""
Evaluation of factored polynomials and their sums in logarithmic form.

A polynomial is only ever stored as its root list; values are carried as
(log magnitude, phase) pairs so that degrees in the thousands neither
overflow nor underflow.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

# Upper bound on the number of (point, root) pairs handled in one numpy block.
_BLOCK: int = 1 << 20


class EvaluationAtRoot(ArithmeticError):
    """
    The evaluation point coincides bit-exactly with a root.
    """


class DerivativeVanished(ArithmeticError):
    """
    The derivative of the sum is numerically zero at the evaluation point.
    """


@dataclass(frozen=True)
class LogComplex:
    """
    The value exp(log_mag) * e^(i * phase); log_mag = -inf encodes an exact zero.
    """
    log_mag: float
    phase: float

    @property
    def value(self) -> complex:
        if self.log_mag == -math.inf:
            return 0j
        return complex(math.exp(self.log_mag) * math.cos(self.phase),
                       math.exp(self.log_mag) * math.sin(self.phase))


class RootPoly:
    """
    The monic polynomial prod_i (z - x_i).
    """
    def __init__(self, roots: Sequence[complex] | np.ndarray) -> None:
        self._roots: np.ndarray = np.array(roots, dtype=np.complex128).ravel()
        if self._roots.size < 1:
            raise ValueError("Invalid polynomial: degree must be at least 1.")
        self._roots.setflags(write=False)

    @property
    def roots(self) -> np.ndarray:
        return self._roots

    @property
    def degree(self) -> int:
        return self._roots.size

    @property
    def max_modulus(self) -> float:
        return float(np.max(np.abs(self._roots)))

    def __repr__(self) -> str:
        return f"RootPoly(degree={self.degree})"


class PolySum:
    """
    S(z) = sum_k p_k(z) for monic parts of a common degree n.
    """
    def __init__(self, parts: Sequence[RootPoly]) -> None:
        self._parts: tuple[RootPoly, ...] = tuple(parts)
        if len(self._parts) == 0:
            raise ValueError("Invalid polynomial sum: no parts.")
        if len({p.degree for p in self._parts}) != 1:
            raise ValueError("Invalid polynomial sum: parts differ in degree.")

    @staticmethod
    def of_roots(*root_lists: Sequence[complex] | np.ndarray) -> 'PolySum':
        return PolySum([RootPoly(r) for r in root_lists])

    @property
    def parts(self) -> tuple[RootPoly, ...]:
        return self._parts

    @property
    def m(self) -> int:
        return len(self._parts)

    @property
    def degree(self) -> int:
        return self._parts[0].degree

    @property
    def max_modulus(self) -> float:
        """
        The largest root modulus over all parts (the M of the Walsh bound).
        """
        return max(p.max_modulus for p in self._parts)


def _factor_terms(roots: np.ndarray, zs: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    For each point in `zs`: the log magnitude, the unit phasor, and the
    logarithmic derivative of prod_i (z - x_i), plus a flag marking
    points that coincide with a root.
    """
    count = zs.size
    log_mag = np.empty(count)
    phasor = np.empty(count, dtype=np.complex128)
    dlog = np.empty(count, dtype=np.complex128)
    hit = np.empty(count, dtype=bool)

    rows = max(1, _BLOCK // roots.size)
    for start in range(0, count, rows):
        stop = min(start + rows, count)
        diff = zs[start:stop, None] - roots[None, :]
        mod = np.abs(diff)
        zero = mod == 0
        hit[start:stop] = zero.any(axis=1)
        safe_mod = np.where(zero, 1.0, mod)
        safe_diff = np.where(zero, 1.0, diff)
        log_mag[start:stop] = np.log(safe_mod).sum(axis=1)
        # Product of unit factors: the phase is reduced per factor and never grows.
        phasor[start:stop] = np.prod(safe_diff / safe_mod, axis=1)
        dlog[start:stop] = (1.0 / safe_diff).sum(axis=1)
    log_mag[hit] = -math.inf
    phasor[hit] = 1.0
    return log_mag, phasor, dlog, hit


def _phase_of(phasor: complex) -> float:
    phase = math.atan2(phasor.imag, phasor.real)
    return math.pi if phase == -math.pi else phase


def log_abs(poly: RootPoly, z: complex | np.ndarray) -> float | np.ndarray:
    """
    sum_i log|z - x_i|; -inf exactly when z is a root.
    """
    zs = np.asarray(z, dtype=np.complex128)
    flat = zs.ravel()
    out = np.empty(flat.size)
    rows = max(1, _BLOCK // poly.degree)
    with np.errstate(divide="ignore"):
        for start in range(0, flat.size, rows):
            stop = min(start + rows, flat.size)
            out[start:stop] = np.log(np.abs(flat[start:stop, None] - poly.roots[None, :])).sum(axis=1)
    return out.reshape(zs.shape)[()]


def log_eval(poly: RootPoly, z: complex) -> LogComplex:
    log_mag, phasor, _, hit = _factor_terms(poly.roots, np.array([z], dtype=np.complex128))
    if hit[0]:
        return LogComplex(-math.inf, 0.0)
    return LogComplex(float(log_mag[0]), _phase_of(complex(phasor[0])))


def log_derivative(poly: RootPoly, z: complex) -> complex:
    """
    p'(z) / p(z) = sum_i 1 / (z - x_i).
    """
    diff = z - poly.roots
    if np.any(diff == 0):
        raise EvaluationAtRoot(f"Evaluation at root {z!r}.")
    return complex(np.sum(1.0 / diff))


def _combine(log_mags: np.ndarray, phasors: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Factor out the largest part at each point.

    -- PARAMETERS --
    log_mags: Array of shape (m, count).
    phasors: Array of shape (m, count).

    -- RETURNS --
    The per-point scale, the order in which parts are summed (descending
    log magnitude, ties broken by phase) and the weighted phasors in that order.
    """
    scale = log_mags.max(axis=0)
    order = np.lexsort((np.angle(phasors), -log_mags), axis=0)
    sorted_mags = np.take_along_axis(log_mags, order, axis=0)
    sorted_phasors = np.take_along_axis(phasors, order, axis=0)
    with np.errstate(invalid="ignore"):
        rel = np.where(np.isfinite(sorted_mags), np.exp(sorted_mags - scale), 0.0)
    return scale, order, rel * sorted_phasors


def _ordered_sum(terms: np.ndarray) -> np.ndarray:
    total = np.zeros(terms.shape[1], dtype=np.complex128)
    for row in terms:
        total = total + row
    return total


def sum_eval(sum: PolySum, z: complex) -> tuple[complex, float]:
    """
    S(z) as (scaled, scale) with S(z) = exp(scale) * scaled and |scaled| <= m.
    """
    zs = np.array([z], dtype=np.complex128)
    terms = [_factor_terms(p.roots, zs) for p in sum.parts]
    log_mags = np.stack([t[0] for t in terms])
    phasors = np.stack([t[1] for t in terms])
    scale = float(log_mags.max())
    if scale == -math.inf:
        return 0j, -math.inf
    _, _, weighted = _combine(log_mags, phasors)
    return complex(_ordered_sum(weighted)[0]), scale


def newton_ratios(sum: PolySum, zs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """
    Vectorised S(z)/S'(z) over an array of points.

    Points that coincide with a root of some part are flagged in the
    second array and their ratio is left as nan; a vanishing derivative
    yields an infinite ratio.
    """
    zs = np.asarray(zs, dtype=np.complex128)
    terms = [_factor_terms(p.roots, zs) for p in sum.parts]
    log_mags = np.stack([t[0] for t in terms])
    phasors = np.stack([t[1] for t in terms])
    dlogs = np.stack([t[2] for t in terms])
    hit = np.any(np.stack([t[3] for t in terms]), axis=0)

    _, order, weighted = _combine(log_mags, phasors)
    num = _ordered_sum(weighted)
    den = _ordered_sum(weighted * np.take_along_axis(dlogs, order, axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = num / den
    vanished = (den == 0) | (np.abs(den) < 1e-300 * np.abs(num))
    ratio[vanished] = math.inf
    ratio[hit] = math.nan
    return ratio, hit


def sum_newton_ratio(sum: PolySum, z: complex) -> complex:
    """
    The Newton step S(z)/S'(z).
    """
    ratio, hit = newton_ratios(sum, np.array([z], dtype=np.complex128))
    if hit[0]:
        raise EvaluationAtRoot(f"Evaluation at component root {z!r}.")
    if math.isinf(abs(ratio[0])):
        raise DerivativeVanished(f"Derivative vanished at {z!r}.")
    return complex(ratio[0])
