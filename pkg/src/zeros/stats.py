"""
Empirical measures of zeros, linear statistics and Monte-Carlo diagnostics.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import optimize
from scipy import stats as sps

from grid import GridSpec
from zeros.limitlaw import BumpFunction
from zeros.measures import RootMeasure
from zeros.polyeval import RootPoly, log_abs

logger = logging.getLogger(__name__)

_LOG2: float = math.log(2.0)


class DegenerateRegion(ValueError):
    """
    A sampling region with zero area.
    """


@dataclass(frozen=True)
class Rectangle:
    x_min: float
    x_max: float
    y_min: float
    y_max: float

    @property
    def area(self) -> float:
        return max(self.x_max - self.x_min, 0.0) * max(self.y_max - self.y_min, 0.0)

    def sample(self, rng: np.random.Generator, size: int | None = None) -> complex | np.ndarray:
        x = rng.uniform(self.x_min, self.x_max, size)
        y = rng.uniform(self.y_min, self.y_max, size)
        return x + 1j * y

    def grid(self, h: float) -> GridSpec:
        return GridSpec(self.x_min, self.x_max, self.y_min, self.y_max, h)


@dataclass(frozen=True)
class Disk:
    center: complex
    radius: float

    @property
    def area(self) -> float:
        return math.pi * max(self.radius, 0.0) ** 2

    def sample(self, rng: np.random.Generator, size: int | None = None) -> complex | np.ndarray:
        r = self.radius * np.sqrt(rng.random(size))
        theta = rng.uniform(-math.pi, math.pi, size)
        return self.center + r * np.exp(1j * theta)

    @staticmethod
    def of(phi: BumpFunction) -> 'Disk':
        """
        The support of a bump function.
        """
        return Disk(phi.center, phi.radius)


Region = Rectangle | Disk


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float

    def z_score(self, expected: float) -> float:
        if self.stderr == 0:
            return 0.0 if self.value == expected else math.copysign(math.inf, self.value - expected)
        return (self.value - expected) / self.stderr


@dataclass
class EmpiricalMeasure:
    """
    The uniform measure on the n computed zeros of one trial.
    """
    points: np.ndarray
    n: int
    seed: int = 0
    measures: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=np.complex128)
        if self.points.size != self.n:
            raise ValueError("Invalid empirical measure: point count differs from the degree.")


@dataclass
class DiagnosticsReport:
    n: int
    trials: int
    ratio_event_prob: float
    ratio_event_stderr: float
    gap_set_measure: float
    concentration_second_moment: float
    concentration_stderr: float

    def to_dict(self) -> dict:
        return asdict(self)


def trial_stream(seed: int, *keys: int) -> np.random.Generator:
    """
    An independent random stream for one trial, derived from the master seed.
    """
    return np.random.default_rng((seed, *keys))


def mean_estimate(samples: Sequence[float]) -> Estimate:
    """
    Sample mean with the standard error of the mean; order independent.
    """
    values = [float(v) for v in samples]
    count = len(values)
    if count == 0:
        raise ValueError("Invalid sample: empty.")
    mean = math.fsum(values) / count
    if count == 1:
        return Estimate(mean, 0.0)
    var = math.fsum((v - mean) ** 2 for v in values) / (count - 1)
    return Estimate(mean, math.sqrt(var / count))


def proportion_estimate(hits: int, trials: int) -> Estimate:
    p = hits / trials
    return Estimate(p, math.sqrt(p * (1.0 - p) / trials))


def linear_statistic(emp: EmpiricalMeasure, phi: BumpFunction) -> float:
    """
    (1/n) sum_i phi(z_i).
    """
    return math.fsum(np.asarray(phi(emp.points)).tolist()) / emp.n


def escape_fraction(emp: EmpiricalMeasure, radius: float) -> float:
    """
    Fraction of the points inside the open disk B(0, radius).
    """
    return float(np.count_nonzero(np.abs(emp.points) < radius)) / emp.n


def ratio_event_probability(mu: RootMeasure, nu: RootMeasure, n: int, region: Region,
                            trials: int, seed: int) -> Estimate:
    """
    P(1/2 <= |p_n(Z) / q_n(Z)| <= 2) with fresh roots and a fresh uniform point Z per trial.
    """
    if trials < 100:
        raise ValueError("Invalid number of trials: at least 100 are needed.")
    if not region.area > 0:
        raise DegenerateRegion("Degenerate sampling region.")
    hits = 0
    for t in range(trials):
        rng = trial_stream(seed, t)
        p = RootPoly(mu.sample(n, rng))
        q = RootPoly(nu.sample(n, rng))
        z = complex(region.sample(rng))
        gap = float(log_abs(p, z)) - float(log_abs(q, z))
        if abs(gap) <= _LOG2:
            hits += 1
    logger.debug("Ratio event: %d/%d hits at n=%d.", hits, trials, n)
    return proportion_estimate(hits, trials)


def gap_threshold(n: int) -> float:
    return math.log(n) ** 2 / math.sqrt(n)


def gap_set_measure(mu: RootMeasure, nu: RootMeasure, K: Rectangle, n: int, h: float) -> float:
    """
    Lebesgue measure of {z in K : |U_mu(z) - U_nu(z)| <= log^2 n / sqrt n}, counted on cells of side h.
    """
    grid = K.grid(h)
    if grid.width < 100 or grid.height < 100:
        raise ValueError("Invalid spacing: at least 100 cells per side are needed.")
    z = grid.centers()
    with np.errstate(invalid="ignore"):
        diff = np.abs(np.asarray(mu.potential(z)) - np.asarray(nu.potential(z)))
    # Cells where both potentials are -inf count as gap cells.
    inside = (diff <= gap_threshold(n)) | np.isnan(diff)
    return float(np.count_nonzero(inside)) * grid.cell_area


def concentration_second_moment(mu: RootMeasure, K: Region, n: int, trials: int, seed: int) -> Estimate:
    """
    E |(1/n) log|p_n(Z)| - U_mu(Z)|^2 with Z uniform on K and fresh roots per trial.
    """
    if trials < 100:
        raise ValueError("Invalid number of trials: at least 100 are needed.")
    samples = []
    for t in range(trials):
        rng = trial_stream(seed, t)
        p = RootPoly(mu.sample(n, rng))
        z = complex(K.sample(rng))
        samples.append((float(log_abs(p, z)) / n - float(mu.potential(z))) ** 2)
    return mean_estimate(samples)


@dataclass(frozen=True)
class CauchyFit:
    ks: float
    max_abs_real: float


def ks_distance_to_cauchy(emp: EmpiricalMeasure) -> CauchyFit:
    """
    Kolmogorov-Smirnov distance of the imaginary parts to the standard Cauchy law,
    with the largest |Re z| as an axis-adherence statistic.
    """
    result = sps.kstest(emp.points.imag, sps.cauchy.cdf)
    return CauchyFit(float(result.statistic), float(np.max(np.abs(emp.points.real))))


def match_roots(a: np.ndarray, b: np.ndarray) -> float:
    """
    Largest distance between matched points under the optimal one-to-one matching.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.size != b.size:
        return math.inf
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = optimize.linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def diagnose(mu: RootMeasure, nu: RootMeasure, n: int, K: Rectangle, trials: int, seed: int,
             h: float) -> DiagnosticsReport:
    ratio = ratio_event_probability(mu, nu, n, K, trials, seed)
    gap = gap_set_measure(mu, nu, K, n, h)
    conc = concentration_second_moment(mu, K, n, trials, seed)
    return DiagnosticsReport(n, trials, ratio.value, ratio.stderr, gap, conc.value, conc.stderr)
