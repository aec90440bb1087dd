import math

import numpy as np
import pytest

from zeros.measures import (Atomic, Mixture, UniformCircle, UniformDisk, measure_from_spec, measure_to_spec,
                            sample_roots, support_radius, unity_roots)


def test_disk_samples_stay_in_support(rng):
    disk = UniformDisk(1.0, 1.0)
    points = sample_roots(disk, 5000, rng)
    assert points.shape == (5000,)
    assert np.all(np.abs(points) <= disk.support_radius)
    assert np.all(np.abs(points - 1.0) <= 1.0 + 1e-12)


def test_disk_samples_are_uniform(rng):
    points = UniformDisk(0j, 1.0).sample(20000, rng)
    assert abs(points.mean()) < 0.03
    # P(|X| < 1/2) = 1/4 for the uniform disk.
    assert abs(np.mean(np.abs(points) < 0.5) - 0.25) < 0.02


def test_samples_are_reproducible():
    disk = UniformDisk(-1.0, 1.0)
    a = disk.sample(100, np.random.default_rng(7))
    b = disk.sample(100, np.random.default_rng(7))
    assert np.array_equal(a, b)


def test_circle_samples_lie_on_circle(rng):
    points = UniformCircle(0j, 2.0).sample(1000, rng)
    assert np.allclose(np.abs(points), 2.0, atol=1e-12)
    assert np.all(np.abs(points) <= 2.0)


def test_atomic_samples_hit_atoms_with_weights(rng):
    measure = Atomic((1.0, 2j), (0.25, 0.75))
    points = measure.sample(20000, rng)
    assert set(points.tolist()) <= {1 + 0j, 2j}
    assert abs(np.mean(points == 2j) - 0.75) < 0.02


def test_mixture_samples_by_component(rng):
    measure = Mixture((UniformDisk(5.0, 0.5), UniformCircle(0j, 1.0)), (0.3, 0.7))
    points = measure.sample(10000, rng)
    assert abs(np.mean(np.abs(points - 5.0) <= 0.5) - 0.3) < 0.02
    assert measure.support_radius == 5.5


def test_disk_potential_closed_form():
    disk = UniformDisk(0j, 2.0)
    assert disk.potential(0j) == pytest.approx(math.log(2.0) - 0.5)
    assert disk.potential(5.0) == pytest.approx(math.log(5.0))
    # Continuous across the boundary.
    assert disk.potential(2.0) == pytest.approx(math.log(2.0))


def test_disk_potential_matches_monte_carlo(rng):
    points = UniformDisk(0j, 1.0).sample(200000, rng)
    z = 0.3
    assert np.mean(np.log(np.abs(z - points))) == pytest.approx(UniformDisk(0j, 1.0).potential(z), abs=0.01)


def test_circle_potential():
    circle = UniformCircle(1j, 2.0)
    assert circle.potential(1j) == pytest.approx(math.log(2.0))
    assert circle.potential(1j + 5.0) == pytest.approx(math.log(5.0))
    assert UniformCircle(0j, 0.0).potential(0j) == -math.inf


def test_atomic_potential():
    pair = Atomic.uniform([1.0, -1.0])
    assert pair.potential(0j) == pytest.approx(0.0)
    assert pair.potential(2.0) == pytest.approx(0.5 * math.log(3.0))
    assert pair.potential(1.0) == -math.inf


def test_potential_is_vectorised():
    z = np.array([[0j, 3.0], [1j, -4.0]])
    values = UniformDisk(0j, 1.0).potential(z)
    assert values.shape == (2, 2)
    assert values[0, 1] == pytest.approx(math.log(3.0))


def test_mixture_potential_is_weighted_sum():
    a, b = UniformDisk(1.0, 1.0), UniformCircle(0j, 2.0)
    mix = Mixture((a, b), (0.4, 0.6))
    z = np.array([0.2 + 0.1j, 3.0, -1.5j])
    assert np.allclose(mix.potential(z), 0.4 * a.potential(z) + 0.6 * b.potential(z))


def test_invalid_measures():
    with pytest.raises(ValueError):
        UniformDisk(0j, 0.0)
    with pytest.raises(ValueError):
        UniformCircle(0j, -1.0)
    with pytest.raises(ValueError):
        Atomic((1.0,), (0.5,))
    with pytest.raises(ValueError):
        Atomic((1.0, 2.0), (1.5, -0.5))
    with pytest.raises(ValueError):
        Mixture((), ())
    with pytest.raises(ValueError):
        sample_roots(UniformDisk(0j, 1.0), 0, np.random.default_rng(0))


def test_support_radius():
    assert support_radius(UniformDisk(3j, 1.0)) == 4.0
    assert support_radius(Atomic.uniform([1.0, -2.0, 0.5j])) == 2.0


def test_unity_roots():
    plain, twisted = unity_roots(4), unity_roots(4, twist=True)
    assert np.allclose(np.array(plain.atoms) ** 4, 1.0)
    assert np.allclose(np.array(twisted.atoms) ** 4, -1.0)
    assert np.allclose(sorted(np.array(unity_roots(2, twist=True).atoms).imag), [-1.0, 1.0])
    with pytest.raises(ValueError):
        unity_roots(0)


def test_measure_specs():
    measures = [
        UniformDisk(1.0, 1.0),
        UniformCircle(0j, 2.0),
        Atomic((1.0, 1j), (0.5, 0.5)),
        Mixture((UniformDisk(3j, 0.5), UniformCircle(0j, 1.0)), (0.25, 0.75)),
    ]
    for measure in measures:
        assert measure_from_spec(measure_to_spec(measure)) == measure

    assert measure_from_spec({"kind": "uniformDisk", "center": [1.0, 0.0], "radius": 1.0}) == UniformDisk(1.0, 1.0)
    assert measure_from_spec({"kind": "unityRoots", "k": 2}) == unity_roots(2)
    assert measure_from_spec({"kind": "atomic", "atoms": [[0.0, 1.0], [0.0, -1.0]]}) == Atomic.uniform([1j, -1j])
    with pytest.raises(ValueError):
        measure_from_spec({"kind": "gaussian"})


VARIANTS = [
    UniformDisk(0.5j, 2.0),
    UniformCircle(0.5, 1.5),
    Atomic((1.0, -1j, 0.5 + 0.5j), (0.2, 0.3, 0.5)),
    Mixture((UniformDisk(1.0, 0.5), UniformCircle(0j, 2.0)), (0.3, 0.7)),
]


@pytest.mark.parametrize("measure", VARIANTS, ids=lambda m: m.name())
def test_potential_approaches_log_modulus(measure):
    bound = 2 * measure.support_radius
    for r in (10.0, 100.0, 1000.0, 10000.0):
        z = r * np.exp(1j * np.linspace(-math.pi, math.pi, 13))
        deviation = np.abs(np.asarray(measure.potential(z)) - np.log(r))
        assert np.all(deviation <= bound / r)


@pytest.mark.parametrize("measure", [UniformDisk(0.5j, 2.0), UniformCircle(-1.0, 1.5)], ids=lambda m: m.name())
def test_potential_is_radially_symmetric(measure):
    theta = np.linspace(-math.pi, math.pi, 17)
    for r in (0.7, 3.5):
        values = np.asarray(measure.potential(measure.center + r * np.exp(1j * theta)))
        assert np.max(values) - np.min(values) <= 1e-12


def test_unity_roots_potential_is_rotation_invariant(rng):
    for k in (2, 3, 5):
        measure = unity_roots(k)
        z = rng.uniform(-2, 2, 10) + 1j * rng.uniform(-2, 2, 10)
        turned = z * np.exp(2j * math.pi / k)
        assert np.allclose(measure.potential(turned), measure.potential(z), rtol=0, atol=1e-12)


@pytest.mark.parametrize("measure", VARIANTS, ids=lambda m: m.name())
def test_potential_matches_monte_carlo_everywhere(measure):
    rng = np.random.default_rng(2024)
    points = measure.sample(200000, rng)
    zs = rng.uniform(-3, 3, 20) + 1j * rng.uniform(-3, 3, 20)
    for z in zs:
        assert np.mean(np.log(np.abs(z - points))) == pytest.approx(measure.potential(z), abs=0.02)
