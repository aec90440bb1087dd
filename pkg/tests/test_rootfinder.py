import math
from dataclasses import replace

import numpy as np
import pytest

from zeros.experiment import TrialJob, cot_zeros, run_trial
from zeros.measures import UniformCircle
from zeros.polyeval import PolySum
from zeros.rootfinder import (DegreeTooSmall, RootFindOptions, _FloorWatch, _gauss_seidel_sweep, _initial_guess,
                              _ratios, certify, containment_radius, find_roots, roundoff_ceiling, walsh_bound,
                              within_walsh)
from zeros.stats import match_roots

# (z-1)(z-2)(z-3) + (z+1)(z+2)(z+3) = 2z^3 + 22z
CUBIC = PolySum.of_roots([1.0, 2.0, 3.0], [-1.0, -2.0, -3.0])
CUBIC_ZEROS = np.array([0j, 1j * math.sqrt(11.0), -1j * math.sqrt(11.0)])


def test_walsh_bound():
    assert walsh_bound(PolySum.of_roots([1.0, 1.0], [-1.0, -1.0])) == pytest.approx(2.0)
    three = PolySum.of_roots([2.0] * 4, [1j] * 4, [-1.0] * 4)
    assert walsh_bound(three) == pytest.approx(4 * 2.0 / math.sin(math.pi / 4) ** 2)
    with pytest.raises(DegreeTooSmall):
        walsh_bound(PolySum.of_roots([1.0], [2.0]))
    assert containment_radius(PolySum.of_roots([1.0], [2.0])) == 2.0


def test_cubic():
    report = find_roots(CUBIC)
    assert match_roots(report.roots, CUBIC_ZEROS) < 1e-10
    assert report.residual_ok
    assert report.max_newton_correction <= 1e-12
    assert report.walsh_radius == pytest.approx(walsh_bound(CUBIC))
    assert certify(CUBIC, report)


def test_cot_formula():
    n = 20
    report = find_roots(PolySum.of_roots([1.0] * n, [-1.0] * n))
    assert match_roots(report.roots, cot_zeros(n)) < 1e-9
    assert np.all(np.abs(report.roots.real) < 1e-9)


def test_matches_coefficient_roots(rng):
    p = rng.uniform(-1, 1, 8) + 1j * rng.uniform(-1, 1, 8)
    q = rng.uniform(-1, 1, 8) + 1j * rng.uniform(-1, 1, 8) + 2.0
    expected = np.roots(np.poly(p) + np.poly(q))
    report = find_roots(PolySum.of_roots(p, q))
    assert match_roots(report.roots, expected) < 1e-8


def test_random_disks_stay_in_walsh_disk(rng, disks):
    for n in (10, 50, 200):
        psum = PolySum.of_roots(disks[0].sample(n, rng), disks[1].sample(n, rng))
        report = find_roots(psum, RootFindOptions(seed=n))
        assert report.residual_ok
        assert np.all(np.abs(report.roots) <= walsh_bound(psum))
        assert certify(psum, report)


def test_three_parts(rng, circles):
    n = 60
    psum = PolySum.of_roots(circles[0].sample(n, rng), circles[1].sample(n, rng), rng.uniform(-1, 1, n))
    report = find_roots(psum)
    assert report.residual_ok
    assert certify(psum, report)


def test_reproducible(disks):
    rng = np.random.default_rng(3)
    psum = PolySum.of_roots(disks[0].sample(40, rng), disks[1].sample(40, rng))
    a = find_roots(psum, RootFindOptions(seed=11))
    b = find_roots(psum, RootFindOptions(seed=11))
    assert np.array_equal(a.roots, b.roots)
    assert a.iterations == b.iterations


def test_certify_rejects_bad_roots():
    report = find_roots(CUBIC)
    moved = replace(report, roots=report.roots + 1e-3)
    assert not certify(CUBIC, moved)
    assert not certify(CUBIC, replace(report, roots=report.roots[:2]))
    assert not certify(CUBIC, replace(report, roots=np.array([0j, 1j, np.nan])))


def test_non_convergence_is_reported(rng, disks):
    n = 50
    psum = PolySum.of_roots(disks[0].sample(n, rng), disks[1].sample(n, rng))
    # A tolerance no double precision residual can reach.
    report = find_roots(psum, RootFindOptions(tol=1e-300, max_iters=20, restarts=0, floor_sweeps=0))
    assert not report.residual_ok
    assert report.iterations == 20


def test_gauss_seidel_sweeps_converge():
    opts = RootFindOptions()
    rng = np.random.default_rng(0)
    z = _initial_guess(CUBIC, opts, rng)
    for _ in range(100):
        _gauss_seidel_sweep(CUBIC, z, rng)
    assert match_roots(z, CUBIC_ZEROS) < 1e-10


def test_iterate_on_component_root_is_perturbed():
    z = np.array([1.0 + 0j, 0.5j])
    ratio, moved = _ratios(CUBIC, z, np.random.default_rng(0))
    assert moved == 1
    assert z[0] != 1.0
    assert np.all(np.isfinite(ratio))


def test_invalid_options():
    with pytest.raises(ValueError):
        RootFindOptions(tol=0.0)
    with pytest.raises(ValueError):
        RootFindOptions(tol=1e-2)
    with pytest.raises(ValueError):
        RootFindOptions(max_iters=5)
    with pytest.raises(ValueError):
        RootFindOptions(restarts=-1)
    with pytest.raises(ValueError):
        RootFindOptions(floor_sweeps=-1)


def test_floor_watch():
    watch = _FloorWatch(ceiling=1e-11, patience=3)
    assert [watch.stalled(r) for r in (1e-3, 1e-6, 3e-12, 4e-12, 2e-12, 3e-12)] == [False] * 5 + [True]

    above = _FloorWatch(ceiling=1e-11, patience=2)
    assert not any(above.stalled(1e-3) for _ in range(5))

    disabled = _FloorWatch(ceiling=1e-11, patience=0)
    assert not any(disabled.stalled(5e-12) for _ in range(5))


def test_stall_within_roundoff_is_accepted(rng, disks):
    n = 50
    psum = PolySum.of_roots(disks[0].sample(n, rng), disks[1].sample(n, rng))
    report = find_roots(psum, RootFindOptions(tol=1e-300, max_iters=200, restarts=0))
    assert report.residual_ok
    assert report.at_roundoff_floor
    assert report.max_newton_correction <= roundoff_ceiling(psum, 1e-300)
    assert report.iterations < 200
    assert certify(psum, report)


def test_roundoff_ceiling():
    assert roundoff_ceiling(CUBIC, 1e-12) == 1e-12
    wide = PolySum.of_roots(np.zeros(500), np.ones(500))
    assert roundoff_ceiling(wide, 1e-12) == pytest.approx(200 * 500 * np.finfo(float).eps)


@pytest.mark.parametrize("n", [2, 10])
def test_roots_all_at_origin(n):
    psum = PolySum.of_roots([0j] * n, [0j] * n)
    report = find_roots(psum)
    assert report.walsh_radius == 0.0
    assert report.residual_ok
    assert np.max(np.abs(report.roots)) < 2 * n * 1e-12
    assert certify(psum, report)


def test_within_walsh_slack():
    psum = PolySum.of_roots([0j] * 4, [0j] * 4)
    assert within_walsh(psum, np.full(4, 7e-12 + 0j), 1e-12)
    assert not within_walsh(psum, np.full(4, 1e-9 + 0j), 1e-12)
    assert not within_walsh(CUBIC, CUBIC_ZEROS * 10, 1e-12)


def test_permutation_invariance(rng, disks):
    n = 30
    p, q = disks[0].sample(n, rng), disks[1].sample(n, rng)
    reference = find_roots(PolySum.of_roots(p, q)).roots
    for psum in (PolySum.of_roots(q, p), PolySum.of_roots(rng.permutation(p), rng.permutation(q))):
        assert match_roots(find_roots(psum).roots, reference) < 1e-9


def test_conjugation_symmetry(rng, disks):
    half = 15
    a, b = disks[0].sample(half, rng), disks[1].sample(half, rng)
    psum = PolySum.of_roots(np.concatenate([a, np.conj(a)]), np.concatenate([b, np.conj(b)]))
    roots = find_roots(psum).roots
    assert match_roots(roots, np.conj(roots)) < 1e-8


def test_unit_and_double_unit_roots():
    unit = np.exp(0.5j * math.pi * np.arange(4))
    report = find_roots(PolySum.of_roots(unit, 2.0 * unit))
    assert np.allclose(np.abs(report.roots), 8.5 ** 0.25, rtol=1e-10)
    # Arguments k pi / 2: the zeros are the scaled fourth roots of unity.
    assert match_roots(report.roots, 8.5 ** 0.25 * unit) < 1e-10


@pytest.mark.slow
def test_circles_at_degree_500():
    circles = (UniformCircle(0j, 1.0), UniformCircle(0j, 2.0))
    for trial in (0, 2):
        result = run_trial(TrialJob(circles, 500, trial, 20240611, RootFindOptions()))
        assert result.report.residual_ok
        assert result.report.restarts_used == 0
        assert certify(PolySum.of_roots(*result.parts), result.report)
