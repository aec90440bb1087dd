"""
The experiment pipelines behind the command-line driver.

Every command takes a validated Config, writes its files under the output
directory and returns an ExitCode.
"""

import logging
import math
import os
import platform
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import IntEnum
from typing import TypeVar

import numpy as np
import scipy

from config import Config, ConfigError
from grid import GridSpec
from zeros import __version__
from zeros.limitlaw import BumpFunction, around, covering, grid_density, weak_integral
from zeros.measures import (Atomic, Mixture, RootMeasure, UniformCircle, UniformDisk, measure_from_spec,
                            sample_roots, unity_roots)
from zeros.output import write_csv, write_json
from zeros.polyeval import PolySum
from zeros.rootfinder import RootFindOptions, RootFindReport, certify, find_roots, within_walsh
from zeros.stats import (EmpiricalMeasure, Estimate, Rectangle, diagnose, escape_fraction, ks_distance_to_cauchy,
                         linear_statistic, match_roots, mean_estimate, trial_stream)

logger = logging.getLogger(__name__)

Job = TypeVar("Job")
Result = TypeVar("Result")

# Quadrature noise below this is not a deviation when every trial gives the same statistic.
_STDERR_FLOOR: float = 1e-9


class ExitCode(IntEnum):
    PASS = 0
    FAIL = 1
    CONFIG = 2
    NONCONVERGED = 3


@dataclass(frozen=True)
class TrialJob:
    measures: tuple[RootMeasure, ...]
    n: int
    trial: int
    seed: int
    options: RootFindOptions


@dataclass
class TrialResult:
    n: int
    trial: int
    parts: tuple[np.ndarray, ...]
    report: RootFindReport

    def summary(self) -> dict:
        return {
            "n": self.n,
            "trial": self.trial,
            "residualOk": self.report.residual_ok,
            "walshRadius": self.report.walsh_radius,
            "iterations": self.report.iterations,
            "maxNewtonCorrection": self.report.max_newton_correction,
            "restartsUsed": self.report.restarts_used,
            "perturbations": self.report.perturbations,
            "atRoundoffFloor": self.report.at_roundoff_floor,
        }


def run_trial(job: TrialJob) -> TrialResult:
    """
    Sample the m root lists of one trial and find the zeros of their sum.

    The trial's stream depends only on (seed, n, trial), so results do not
    depend on which worker runs it.
    """
    rng = trial_stream(job.seed, job.n, job.trial)
    parts = tuple(sample_roots(measure, job.n, rng) for measure in job.measures)
    opts = replace(job.options, seed=int(rng.integers(2 ** 63)))
    report = find_roots(PolySum.of_roots(*parts), opts)
    return TrialResult(job.n, job.trial, parts, report)


def pool_map(func: Callable[[Job], Result], jobs: Sequence[Job], threads: int | None = None) -> list[Result]:
    """
    Apply `func` to every job on a process pool; results come back in job order.
    """
    workers = threads or os.cpu_count() or 1
    if workers == 1 or len(jobs) <= 1:
        return [func(job) for job in jobs]
    logger.debug("Running %d job(s) on %d worker(s).", len(jobs), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, jobs))


def run_trials(jobs: Sequence[TrialJob], threads: int | None = None) -> list[TrialResult]:
    return pool_map(run_trial, jobs, threads)


def load_measures(specs: Sequence[dict]) -> tuple[RootMeasure, ...]:
    try:
        return tuple(measure_from_spec(spec) for spec in specs)
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"Invalid measure: {err}") from err


def load_bumps(specs: Sequence[dict]) -> list[BumpFunction]:
    bumps = []
    try:
        for spec in specs:
            re, im = spec["center"]
            bumps.append(BumpFunction(complex(float(re), float(im)), float(spec["radius"]),
                                      float(spec.get("amplitude", 1.0))))
    except (KeyError, TypeError, ValueError) as err:
        raise ConfigError(f"Invalid bump: {err}") from err
    return bumps


def root_find_options(cfg: Config) -> RootFindOptions:
    opts = cfg.root_finder
    try:
        return RootFindOptions(tol=float(opts.get("tol", 1e-12)),
                               max_iters=int(opts.get("maxIters", 500)),
                               restarts=int(opts.get("restarts", 3)),
                               init_radius_factor=float(opts.get("initRadiusFactor", 1.5)),
                               floor_sweeps=int(opts.get("floorSweeps", 5)))
    except ValueError as err:
        raise ConfigError(f"Invalid root finder options: {err}") from err


def density_grid(cfg: Config, measures: Sequence[RootMeasure]) -> GridSpec:
    """
    Explicit bounds from the file, or the square covering every support.
    """
    grid = cfg.grid
    if "xMin" in grid:
        return GridSpec.from_dict(grid)
    return covering(measures, float(grid["h"]), float(grid.get("margin", 2.0)))


def versions() -> dict[str, str]:
    return {"zeros": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def manifest(cfg: Config, **fields) -> dict:
    return {"configHash": cfg.hash(), "seed": cfg.seed, "versions": versions(), **fields}


def jobs_for(cfg: Config, measures: tuple[RootMeasure, ...], n: int) -> list[TrialJob]:
    opts = root_find_options(cfg)
    return [TrialJob(measures, n, t, cfg.seed, opts) for t in range(cfg.trials)]


def cmd_simulate(cfg: Config) -> ExitCode:
    """
    Per-trial CSV of component roots and zeros of the sum, plus a manifest.
    """
    measures = load_measures(cfg.measures)
    out = cfg.output_dir / "simulate"
    trials = []
    for n in cfg.n:
        for result in run_trials(jobs_for(cfg, measures, n), cfg.threads):
            rows = []
            for k, part in enumerate(result.parts, start=1):
                rows.extend((f"p{k}", z.real, z.imag) for z in part.tolist())
            rows.extend(("zero", z.real, z.imag) for z in result.report.roots.tolist())
            write_csv(out / f"n{n}" / f"trial{result.trial:04d}.csv", ["series", "re", "im"], rows)
            trials.append(result.summary())

    complete = all(t["residualOk"] for t in trials)
    write_json(out / "manifest.json", manifest(cfg, command="simulate", complete=complete, trials=trials))
    if not complete:
        failed = sum(not t["residualOk"] for t in trials)
        logger.error("%d trial(s) did not converge; their outputs are flagged in the manifest.", failed)
        return ExitCode.NONCONVERGED
    logger.info("Simulated %d trial(s) into %s.", len(trials), out)
    return ExitCode.PASS


def cmd_predict(cfg: Config) -> ExitCode:
    """
    Grid density of the predicted limit measure and its weak integrals against the bumps.
    """
    measures = load_measures(cfg.measures)
    bumps = load_bumps(cfg.bumps)
    out = cfg.output_dir / "predict"
    out.mkdir(parents=True, exist_ok=True)

    grid = density_grid(cfg, measures)
    density = grid_density(measures, grid)
    density.to_csv(out / "density.csv")

    explicit = "xMin" in cfg.grid
    rows = []
    for k, phi in enumerate(bumps):
        predicted = weak_integral(measures, phi, grid if explicit else around(phi, grid.h))
        rows.append((k, phi.center.real, phi.center.imag, phi.radius, phi.amplitude, predicted))
    write_csv(out / "bumps.csv", ["bump", "re", "im", "radius", "amplitude", "predicted"], rows)

    values = density.values[~density.mask]
    summary = {
        "totalMass": density.total(),
        "minCellMass": float(values.min()) if values.size else math.nan,
        "maskedCells": int(density.mask.sum()),
        "grid": grid.to_dict(),
    }
    write_json(out / "manifest.json", manifest(cfg, command="predict", **summary))
    logger.info("Predicted density on %dx%d cells, total mass %.6f.", grid.width, grid.height, summary["totalMass"])
    return ExitCode.PASS


@dataclass
class BumpComparison:
    n: int
    bump: int
    phi: BumpFunction
    empirical: Estimate
    predicted: float
    threshold: float

    @property
    def z_score(self) -> float:
        floored = Estimate(self.empirical.value, max(self.empirical.stderr, _STDERR_FLOOR))
        return floored.z_score(self.predicted)

    @property
    def passed(self) -> bool:
        return abs(self.z_score) <= self.threshold

    def row(self) -> tuple:
        return (self.n, self.bump, self.phi.center.real, self.phi.center.imag, self.phi.radius,
                self.empirical.value, self.empirical.stderr, self.predicted, self.z_score, self.passed)

    def __str__(self) -> str:
        return (f"n={self.n} bump {self.bump} at {self.phi.center:.3g} r={self.phi.radius:g}: "
                f"{self.empirical.value:.5f} ± {self.empirical.stderr:.5f} vs {self.predicted:.5f} "
                f"(z={self.z_score:+.2f}) {'PASS' if self.passed else 'FAIL'}")


def cmd_compare(cfg: Config) -> ExitCode:
    """
    Trial-mean linear statistics against predicted weak integrals, one z-score per (n, bump).

    `compare.predictMeasures`, when set, replaces the measures used for the
    prediction; a deliberately wrong one is the negative control.
    """
    options = cfg.command("compare")
    measures = load_measures(cfg.measures)
    predict_with = load_measures(options["predictMeasures"]) if options.get("predictMeasures") else measures
    bumps = load_bumps(cfg.bumps)
    h = float(options.get("gridH", cfg.grid["h"]))
    threshold = float(options.get("zThreshold", 3.0))
    predicted = [weak_integral(predict_with, phi, around(phi, h)) for phi in bumps]

    comparisons: list[BumpComparison] = []
    trials = []
    for n in cfg.n:
        results = run_trials(jobs_for(cfg, measures, n), cfg.threads)
        trials.extend(r.summary() for r in results)
        empirical = [EmpiricalMeasure(r.report.roots, n, cfg.seed) for r in results]
        for k, phi in enumerate(bumps):
            estimate = mean_estimate([linear_statistic(emp, phi) for emp in empirical])
            comparison = BumpComparison(n, k, phi, estimate, predicted[k], threshold)
            logger.info("%s", comparison)
            comparisons.append(comparison)

    out = cfg.output_dir / "compare"
    write_csv(out / "table.csv", ["n", "bump", "re", "im", "radius", "mean", "stderr", "predicted", "z", "pass"],
              (c.row() for c in comparisons))
    passed = all(c.passed for c in comparisons)
    complete = all(t["residualOk"] for t in trials)
    write_json(out / "manifest.json", manifest(cfg, command="compare", passed=passed, complete=complete,
                                               trials=trials))
    if not complete:
        logger.error("Some trials did not converge.")
        return ExitCode.NONCONVERGED
    return ExitCode.PASS if passed else ExitCode.FAIL


@dataclass
class Check:
    name: str
    value: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tolerance)

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "tolerance": self.tolerance, "passed": self.passed}


def cot_zeros(n: int) -> np.ndarray:
    """
    Exact zeros of (z - 1)^n + (z + 1)^n: -i cot((2k + 1) pi / 2n), k = 0..n-1.
    """
    k = np.arange(n)
    return -1j / np.tan((2 * k + 1) * math.pi / (2 * n))


def modulus_zeros(n: int) -> np.ndarray:
    """
    Exact zeros of (z^n - 1) + (z^n - 2^n): ((2^n + 1) / 2)^(1/n) times the n-th roots of unity.
    """
    r = math.exp((math.log(2.0 ** n + 1.0) - math.log(2.0)) / n)
    return r * np.exp(2j * math.pi * np.arange(n) / n)


def check_cot(n: int, tol: float, seed: int) -> Check:
    report = find_roots(PolySum.of_roots([1.0] * n, [-1.0] * n), RootFindOptions(seed=seed))
    return Check(f"cot formula (n={n})", match_roots(report.roots, cot_zeros(n)), tol)


def check_cot_cauchy(n: int, tol: float) -> Check:
    fit = ks_distance_to_cauchy(EmpiricalMeasure(cot_zeros(n), n))
    return Check(f"exact cot zeros vs Cauchy (n={n})", fit.ks, tol)


def check_modulus(n: int, tol: float, seed: int) -> Check:
    roots = np.exp(2j * math.pi * np.arange(n) / n)
    report = find_roots(PolySum.of_roots(roots, 2.0 * roots), RootFindOptions(seed=seed))
    exact = modulus_zeros(n)
    r = abs(exact[0])
    moduli = float(np.max(np.abs(np.abs(report.roots) / r - 1.0)))
    # Matched distance over r bounds the argument error.
    arguments = match_roots(report.roots, exact) / r
    return Check(f"modulus formula (n={n})", max(moduli, arguments), tol)


def walsh_catalogue() -> list[RootMeasure]:
    return [
        UniformDisk(1.0, 1.0), UniformDisk(-1.0, 1.0), UniformDisk(0j, 1.0),
        UniformCircle(0j, 1.0), UniformCircle(0j, 2.0),
        unity_roots(2), unity_roots(2, twist=True),
        Mixture((UniformDisk(0j, 0.5), UniformCircle(0j, 1.5)), (0.5, 0.5)),
        Atomic((0.5j, 2.0), (0.25, 0.75)),
    ]


@dataclass(frozen=True)
class WalshJob:
    seed: int
    instance: int


def run_walsh_instance(job: WalshJob) -> bool:
    """
    One random instance with m in {2, 3} and n in {10, 50, 200}; True iff
    its zeros are certified and inside the Walsh disk.
    """
    catalogue = walsh_catalogue()
    rng = trial_stream(job.seed, 0x57A15, job.instance)
    m = int(rng.choice([2, 3]))
    n = int(rng.choice([10, 50, 200]))
    chosen = rng.choice(len(catalogue), size=m, replace=False)
    psum = PolySum.of_roots(*(catalogue[c].sample(n, rng) for c in chosen))
    opts = RootFindOptions(seed=int(rng.integers(2 ** 63)))
    report = find_roots(psum, opts)
    inside = within_walsh(psum, report.roots, max(opts.tol, report.max_newton_correction))
    if not (inside and certify(psum, report, seed=job.instance)):
        logger.warning("Walsh instance %d (m=%d, n=%d) failed.", job.instance, m, n)
        return False
    return True


def check_walsh(instances: int, seed: int, threads: int | None = None) -> Check:
    """
    Counts the random instances whose zeros are uncertified or leave the Walsh disk.
    """
    passed = pool_map(run_walsh_instance, [WalshJob(seed, i) for i in range(instances)], threads)
    failures = sum(not ok for ok in passed)
    return Check(f"Walsh containment ({instances} instances)", float(failures), 0.0)


def cmd_verify(cfg: Config) -> ExitCode:
    """
    Exact-formula suites; passes iff every check is within its tolerance.
    """
    options = cfg.command("verify")
    cot_n = int(options.get("cotDegree", 100))
    suites: list[Callable[[], Check]] = [
        lambda: check_cot(cot_n, float(options.get("cotTolerance", 1e-8)), cfg.seed),
        lambda: check_cot_cauchy(cot_n, float(options.get("ksControl", 0.01))),
        lambda: check_modulus(int(options.get("modulusDegree", 64)), float(options.get("modulusTolerance", 1e-10)),
                              cfg.seed),
        lambda: check_walsh(int(options.get("walshInstances", 100)), cfg.seed, cfg.threads),
    ]
    checks = []
    for suite in suites:
        start = time.perf_counter()
        check = suite()
        logger.info("%s: %.3g (tolerance %.3g) %s in %.2fs.", check.name, check.value, check.tolerance,
                    "PASS" if check.passed else "FAIL", time.perf_counter() - start)
        checks.append(check)

    passed = all(c.passed for c in checks)
    write_json(cfg.output_dir / "verify" / "report.json",
               manifest(cfg, command="verify", passed=passed, checks=[c.to_dict() for c in checks]))
    return ExitCode.PASS if passed else ExitCode.FAIL


def cmd_diagnose(cfg: Config) -> ExitCode:
    """
    Ratio event, gap set and concentration diagnostics for the first two measures, per degree.
    """
    options = cfg.command("diagnose")
    measures = load_measures(cfg.measures)
    if len(measures) < 2:
        raise ConfigError("Diagnostics need at least two measures.")
    box = options.get("region", {"xMin": -0.5, "xMax": 0.5, "yMin": -0.5, "yMax": 0.5})
    K = Rectangle(float(box["xMin"]), float(box["xMax"]), float(box["yMin"]), float(box["yMax"]))
    trials = int(options.get("trials", cfg.trials))
    h = float(options.get("gridH", cfg.grid["h"]))

    reports = []
    for n in cfg.n:
        report = diagnose(measures[0], measures[1], n, K, trials, cfg.seed, h)
        logger.info("n=%d: ratio event %.4f ± %.4f, gap set %.4g, concentration %.4g ± %.2g.", n,
                    report.ratio_event_prob, report.ratio_event_stderr, report.gap_set_measure,
                    report.concentration_second_moment, report.concentration_stderr)
        reports.append(report.to_dict())
    write_json(cfg.output_dir / "diagnose" / "report.json",
               manifest(cfg, command="diagnose", region=box, reports=reports))
    return ExitCode.PASS


DEFAULT_ESCAPE_MEASURES: list[dict] = [
    {"kind": "uniformCircle", "center": [0.0, 0.0], "radius": 1.0},
    {"kind": "uniformCircle", "center": [0.0, 0.0], "radius": 2.0},
]


def cmd_pilot(cfg: Config) -> ExitCode:
    """
    Pilot ensemble on trials disjoint from the acceptance runs; derives the pass thresholds.

    Writes pilot/thresholds.json holding the KS and escape thresholds, the
    stderr bound per bump at `trials` trials and the raw pilot statistics.
    Fails when a derived threshold exceeds its cap under `acceptance`.
    """
    options = cfg.command("pilot")
    acceptance = cfg.acceptance
    first = int(options.get("firstTrial", 100000))
    count = int(options.get("trials", 20))
    margin = float(options.get("margin", 1.5))
    if count < 2:
        raise ConfigError("The pilot needs at least two trials.")
    opts = root_find_options(cfg)
    measures = load_measures(cfg.measures)
    escape_measures = load_measures(options.get("escapeMeasures") or DEFAULT_ESCAPE_MEASURES)
    bumps = load_bumps(cfg.bumps)

    trials = []

    def ensemble(chosen: tuple[RootMeasure, ...], n: int) -> list[EmpiricalMeasure]:
        jobs = [TrialJob(chosen, n, first + t, cfg.seed, opts) for t in range(count)]
        results = run_trials(jobs, cfg.threads)
        trials.extend(r.summary() for r in results)
        return [EmpiricalMeasure(r.report.roots, n, cfg.seed) for r in results]

    compare_n = int(options.get("compareDegree", 200))
    compare_zeros = ensemble(measures, compare_n)
    stderr_bounds = []
    for k, phi in enumerate(bumps):
        estimate = mean_estimate([linear_statistic(emp, phi) for emp in compare_zeros])
        # The pilot's spread projected onto the acceptance trial count.
        bound = margin * estimate.stderr * math.sqrt(count / cfg.trials)
        stderr_bounds.append({"bump": k, "mean": estimate.value, "stderr": estimate.stderr, "stderrBound": bound})

    ks_n = int(options.get("ksDegree", 500))
    ks = np.array([ks_distance_to_cauchy(emp).ks for emp in ensemble(measures, ks_n)])
    pass_fraction = float(acceptance.get("ksPassFraction", 0.9))
    ks_threshold = margin * float(np.quantile(ks, pass_fraction))

    escape_n = int(options.get("escapeDegree", 500))
    radius = 1.0 + 3.0 * float(acceptance.get("escapeEpsilon", 0.01))
    fractions = [escape_fraction(emp, radius) for emp in ensemble(escape_measures, escape_n)]
    escape = mean_estimate(fractions)
    # One stray zero per trial is the smallest resolvable fraction.
    escape_threshold = margin * max(escape.value + 3.0 * escape.stderr, 1.0 / escape_n)

    ks_cap = float(acceptance.get("ksThreshold", 0.15))
    escape_cap = float(acceptance.get("escapeThreshold", 0.02))
    within_caps = ks_threshold <= ks_cap and escape_threshold <= escape_cap
    complete = all(t["residualOk"] for t in trials)
    thresholds = {
        "ksThreshold": ks_threshold,
        "ksPassFraction": pass_fraction,
        "escapeThreshold": escape_threshold,
        "escapeRadius": radius,
        "stderrBounds": stderr_bounds,
    }
    statistics = {"ks": ks, "escapeFractions": fractions, "ksDegree": ks_n, "escapeDegree": escape_n,
                  "compareDegree": compare_n, "trials": count, "firstTrial": first, "margin": margin}
    write_json(cfg.output_dir / "pilot" / "thresholds.json",
               manifest(cfg, command="pilot", complete=complete, withinCaps=within_caps, thresholds=thresholds,
                        statistics=statistics, trials=trials))
    logger.info("Pilot: KS threshold %.4f (cap %.4g), escape threshold %.4g (cap %.4g).", ks_threshold, ks_cap,
                escape_threshold, escape_cap)
    if not complete:
        logger.error("Some pilot trials did not converge.")
        return ExitCode.NONCONVERGED
    return ExitCode.PASS if within_caps else ExitCode.FAIL


COMMANDS: dict[str, Callable[[Config], ExitCode]] = {
    "simulate": cmd_simulate,
    "predict": cmd_predict,
    "compare": cmd_compare,
    "verify": cmd_verify,
    "diagnose": cmd_diagnose,
    "pilot": cmd_pilot,
}


def run(command: str, cfg: Config) -> ExitCode:
    if command not in COMMANDS:
        raise ConfigError(f"Invalid command: {command!r}.")
    start = time.perf_counter()
    code = COMMANDS[command](cfg)
    logger.info("%s finished with exit code %d in %.1fs.", command, int(code), time.perf_counter() - start)
    return code
