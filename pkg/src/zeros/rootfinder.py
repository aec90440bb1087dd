"""
Simultaneous root finding for sums of factored polynomials (Aberth-Ehrlich).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from zeros.polyeval import PolySum, RootPoly, log_abs, newton_ratios, sum_eval

logger = logging.getLogger(__name__)

# Corrections below this multiple of n * eps are within the evaluation's roundoff floor.
_ROUNDOFF_FACTOR: float = 200.0
_EPS: float = float(np.finfo(float).eps)


class DegreeTooSmall(ValueError):
    """
    The Walsh bound needs degree n >= 2.
    """


@dataclass(frozen=True)
class RootFindOptions:
    tol: float = 1e-12
    max_iters: int = 500
    restarts: int = 3
    init_radius_factor: float = 1.5
    seed: int = 0
    # Sweeps without a twofold drop in the largest correction before roundoff is accepted; 0 disables.
    floor_sweeps: int = 5

    def __post_init__(self) -> None:
        if not 0 < self.tol < 1e-3:
            raise ValueError("Invalid tolerance.")
        if self.max_iters < 10:
            raise ValueError("Invalid maximum number of iterations.")
        if self.restarts < 0:
            raise ValueError("Invalid number of restarts.")
        if not self.init_radius_factor > 0:
            raise ValueError("Invalid initial radius factor.")
        if self.floor_sweeps < 0:
            raise ValueError("Invalid number of floor sweeps.")


@dataclass
class RootFindReport:
    roots: np.ndarray
    iterations: int
    # Largest relative Newton correction |w_j| / (1 + |z_j|) at the returned roots.
    max_newton_correction: float
    residual_ok: bool
    walsh_radius: float
    restarts_used: int = 0
    perturbations: int = 0
    # Set when the corrections stalled above tol but within the roundoff floor.
    at_roundoff_floor: bool = False


class _FloorWatch:
    """
    Tracks the largest correction per sweep and reports when it has stopped
    decreasing while already within `ceiling`.
    """
    def __init__(self, ceiling: float, patience: int) -> None:
        self._ceiling: float = ceiling
        self._patience: int = patience
        self._best: float = math.inf
        self._stalled: int = 0

    def stalled(self, rel: float) -> bool:
        if rel < 0.5 * self._best:
            self._best = rel
            self._stalled = 0
        else:
            self._stalled += 1
        return self._patience > 0 and self._stalled >= self._patience and rel <= self._ceiling


def roundoff_ceiling(sum: PolySum, tol: float) -> float:
    """
    The largest correction accepted once iteration has stalled: max(tol, c * n * eps).
    """
    return max(tol, _ROUNDOFF_FACTOR * sum.degree * _EPS)


def walsh_bound(sum: PolySum) -> float:
    """
    Radius of the origin-centred disk containing every zero of the sum:
    2^(m-1) M / sin(pi/n)^(m-1), where every part has its roots in B(M).
    """
    n = sum.degree
    if n < 2:
        raise DegreeTooSmall("Walsh bound needs degree at least 2.")
    m = sum.m
    return (2.0 ** (m - 1)) * sum.max_modulus / (math.sin(math.pi / n) ** (m - 1))


def containment_radius(sum: PolySum) -> float:
    # n = 1: the single zero is the mean of the parts' roots, inside B(M).
    return walsh_bound(sum) if sum.degree >= 2 else sum.max_modulus


def within_walsh(sum: PolySum, roots: np.ndarray, tol: float) -> bool:
    """
    Whether every root lies in the containment disk, up to twice the
    n * tol that iteration leaves on a root of multiplicity up to n.
    """
    radius = containment_radius(sum)
    slack = 2.0 * sum.degree * tol * (1.0 + radius)
    return bool(np.all(np.abs(roots) <= radius + slack))


def _unit(rng: np.random.Generator, size: int) -> np.ndarray:
    return np.exp(1j * rng.uniform(-math.pi, math.pi, size))


def _separate(z: np.ndarray, rng: np.random.Generator) -> int:
    """
    Nudge iterates that collided with an earlier iterate. Returns how many were moved.
    """
    if z.size < 2:
        return 0
    scale = 1.0 + np.abs(z)
    close = np.abs(z[:, None] - z[None, :]) < 1e-14 * np.maximum(scale[:, None], scale[None, :])
    moved = np.triu(close, k=1).any(axis=0)
    count = int(moved.sum())
    if count:
        z[moved] += 1e-10 * scale[moved] * _unit(rng, count)
    return count


def _ratios(sum: PolySum, z: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """
    Newton ratios at every iterate, moving iterates off component roots first.
    """
    perturbed = 0
    ratio, hit = newton_ratios(sum, z)
    while np.any(hit):
        idx = np.flatnonzero(hit)
        perturbed += idx.size
        logger.debug("Perturbing %d iterate(s) that hit a component root.", idx.size)
        z[idx] += 1e-12 * (1.0 + np.abs(z[idx])) * _unit(rng, idx.size)
        ratio[idx], hit_again = newton_ratios(sum, z[idx])
        hit = np.zeros_like(hit)
        hit[idx[hit_again]] = True
    return ratio, perturbed


def _aberth_step(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    diff = z[:, None] - z[None, :]
    np.fill_diagonal(diff, 1.0)
    inv = 1.0 / diff
    np.fill_diagonal(inv, 0.0)
    return w / (1.0 - w * inv.sum(axis=1))


def _jacobi_sweep(z: np.ndarray, w: np.ndarray, scale: float, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    finite = np.isfinite(w)
    step = np.zeros_like(z)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        step[finite] = _aberth_step(z, np.where(finite, w, 0.0))[finite]
        z = z - step
    stuck = ~finite | ~np.isfinite(z)
    count = int(stuck.sum())
    if count:
        base = np.where(np.isfinite(z[stuck]), z[stuck], 0.0)
        z[stuck] = base + 1e-10 * (1.0 + scale) * _unit(rng, count)
    return z, count


def _gauss_seidel_sweep(sum: PolySum, z: np.ndarray, rng: np.random.Generator) -> int:
    """
    One serial sweep in place: each update sees the iterates already moved in this sweep.
    """
    perturbed = 0
    for j in range(z.size):
        ratio, moved = _ratios(sum, z[j:j + 1], rng)
        perturbed += moved
        w = ratio[0]
        others = np.delete(z, j)
        repulsion = np.sum(1.0 / (z[j] - others)) if others.size else 0j
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            new = z[j] - w / (1.0 - w * repulsion)
        if np.isfinite(new):
            z[j] = new
        else:
            z[j] += 1e-10 * (1.0 + abs(z[j])) * _unit(rng, 1)[0]
            perturbed += 1
    return perturbed


def _initial_guess(sum: PolySum, opts: RootFindOptions, rng: np.random.Generator) -> np.ndarray:
    n = sum.degree
    radius = opts.init_radius_factor * (sum.max_modulus + 1.0)
    eta = rng.random()
    return radius * np.exp(2j * math.pi * (np.arange(n) + eta) / n)


def find_roots(sum: PolySum, opts: RootFindOptions = RootFindOptions()) -> RootFindReport:
    """
    All n zeros of the sum by Aberth-Ehrlich iteration.

    Sweeps are Jacobi style (every update uses the previous iterate); the
    last restart falls back to Gauss-Seidel sweeps. Each restart begins on
    a circle of radius init_radius_factor * (M + 1) with a fresh angular offset.

    Iteration stops once every relative correction is at most `tol`, or
    once the largest one has stalled for `floor_sweeps` sweeps within the
    roundoff ceiling max(tol, c * n * eps); the report flags the latter.
    """
    rng = np.random.default_rng(opts.seed)
    walsh = containment_radius(sum)
    ceiling = roundoff_ceiling(sum, opts.tol)
    iterations = 0
    perturbations = 0
    z = np.zeros(sum.degree, dtype=np.complex128)
    rel = math.inf

    for restart in range(opts.restarts + 1):
        serial = restart == opts.restarts and opts.restarts > 0
        z = _initial_guess(sum, opts, rng)
        watch = _FloorWatch(ceiling, opts.floor_sweeps)
        for _ in range(opts.max_iters):
            iterations += 1
            perturbations += _separate(z, rng)
            w, moved = _ratios(sum, z, rng)
            perturbations += moved
            rel_all = np.where(np.isfinite(w), np.abs(w) / (1.0 + np.abs(z)), math.inf)
            rel = float(rel_all.max())
            at_floor = rel > opts.tol and watch.stalled(rel)
            if rel <= opts.tol or at_floor:
                inside = within_walsh(sum, z, max(opts.tol, rel))
                if not inside:
                    logger.warning("Converged roots escape the Walsh disk of radius %.6g.", walsh)
                if at_floor:
                    logger.debug("Corrections stalled at %.3g after %d sweep(s), restart %d.", rel, iterations,
                                 restart)
                else:
                    logger.debug("Converged after %d sweep(s), restart %d.", iterations, restart)
                return RootFindReport(z, iterations, rel, inside, walsh, restart, perturbations, at_floor)
            if serial:
                perturbations += _gauss_seidel_sweep(sum, z, rng)
            else:
                z, stuck = _jacobi_sweep(z, w, walsh, rng)
                perturbations += stuck
        logger.debug("Restart %d ended without convergence (max correction %.3g).", restart, rel)

    logger.warning("Root finding did not converge after %d sweeps (max correction %.3g).", iterations, rel)
    return RootFindReport(z, iterations, rel, False, walsh, opts.restarts, perturbations)


def certify(sum: PolySum, report: RootFindReport, tol: float = 1e-10, points: int = 5, seed: int = 0) -> bool:
    """
    Independent check of a root-finding report.

    Passes iff (a) every root has relative Newton correction at most `tol`,
    (b) every root lies in the Walsh disk and (c) m * prod(z - z_j)
    reproduces S at `points` random points to 1e-6 in log magnitude.
    """
    roots = np.asarray(report.roots, dtype=np.complex128)
    if roots.size != sum.degree or not np.all(np.isfinite(roots)):
        return False

    rng = np.random.default_rng(seed)
    ratio, hit = newton_ratios(sum, roots)
    if np.any(hit):
        # A zero sitting exactly on a component root is judged at a nudged point.
        nudged = roots[hit] + 1e-15 * (1.0 + np.abs(roots[hit])) * _unit(rng, int(hit.sum()))
        ratio[hit], _ = newton_ratios(sum, nudged)
    if not np.all(np.abs(ratio) <= tol * (1.0 + np.abs(roots))):
        return False

    if not within_walsh(sum, roots, tol):
        return False

    radius = 2.0 * (max(float(np.max(np.abs(roots))), sum.max_modulus) + 1.0)
    fitted = RootPoly(roots)
    for p in radius * _unit(rng, points):
        scaled, scale = sum_eval(sum, complex(p))
        if scaled == 0:
            return False
        exact = scale + math.log(abs(scaled))
        approx = math.log(sum.m) + float(log_abs(fitted, p))
        if abs(exact - approx) > 1e-6:
            return False
    return True
