"""
Root distributions: sampling, closed-form logarithmic potentials and support bounds.
"""

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

ComplexLike = complex | np.ndarray

_WEIGHT_TOL: float = 1e-12


def _as_complex(z: ComplexLike) -> np.ndarray:
    return np.asarray(z, dtype=np.complex128)


def _clamp(points: np.ndarray, radius: float) -> np.ndarray:
    """
    Pull the rare sample that rounding pushed past the support bound back onto it.
    """
    mod = np.abs(points)
    outside = mod > radius
    if np.any(outside):
        scale = np.nextafter(radius / mod[outside], 0.0)
        points[outside] = points[outside] * scale
    return points


def _check_weights(weights: Sequence[float]) -> None:
    if len(weights) == 0:
        raise ValueError("Invalid measure: no weights.")
    if any(w <= 0 for w in weights):
        raise ValueError("Invalid measure: weights must be positive.")
    if abs(math.fsum(weights) - 1.0) > _WEIGHT_TOL:
        raise ValueError("Invalid measure: weights must sum to 1.")


class RootMeasure:
    """
    A compactly supported probability measure on the complex plane.
    """

    @staticmethod
    def name() -> str:
        raise NotImplementedError

    @property
    def support_radius(self) -> float:
        """
        The smallest R such that the support lies in the closed disk of radius R about the origin.
        """
        raise NotImplementedError

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """
        Draw `n` i.i.d. points.
        """
        raise NotImplementedError

    def potential(self, z: ComplexLike) -> np.ndarray | float:
        """
        The logarithmic potential U(z) = ∫ log|z - w| dμ(w), evaluated elementwise.
        """
        raise NotImplementedError


@dataclass(frozen=True)
class UniformDisk(RootMeasure):
    center: complex
    radius: float

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError("Invalid disk radius.")
        object.__setattr__(self, "center", complex(self.center))

    @staticmethod
    def name() -> str:
        return "uniformDisk"

    @property
    def support_radius(self) -> float:
        return abs(self.center) + self.radius

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        # r = R sqrt(u) gives exact uniformity without rejection.
        r = self.radius * np.sqrt(rng.random(n))
        theta = rng.uniform(-math.pi, math.pi, n)
        return _clamp(self.center + r * np.exp(1j * theta), self.support_radius)

    def potential(self, z: ComplexLike) -> np.ndarray | float:
        d = np.abs(_as_complex(z) - self.center)
        with np.errstate(divide="ignore"):
            outside = np.log(np.where(d > self.radius, d, 1.0))
        inside = 0.5 * ((d / self.radius) ** 2 - 1.0) + math.log(self.radius)
        return np.where(d > self.radius, outside, inside)[()]


@dataclass(frozen=True)
class UniformCircle(RootMeasure):
    center: complex
    radius: float

    def __post_init__(self) -> None:
        if not self.radius >= 0:
            raise ValueError("Invalid circle radius.")
        object.__setattr__(self, "center", complex(self.center))

    @staticmethod
    def name() -> str:
        return "uniformCircle"

    @property
    def support_radius(self) -> float:
        return abs(self.center) + self.radius

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        theta = rng.uniform(-math.pi, math.pi, n)
        return _clamp(self.center + self.radius * np.exp(1j * theta), self.support_radius)

    def potential(self, z: ComplexLike) -> np.ndarray | float:
        d = np.abs(_as_complex(z) - self.center)
        with np.errstate(divide="ignore"):
            return np.log(np.maximum(d, self.radius))[()]


@dataclass(frozen=True)
class Atomic(RootMeasure):
    """
    Finitely many atoms with positive weights summing to one.
    """
    atoms: tuple[complex, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.atoms) != len(self.weights):
            raise ValueError("Invalid atomic measure: atoms and weights differ in length.")
        _check_weights(self.weights)
        object.__setattr__(self, "atoms", tuple(complex(a) for a in self.atoms))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @staticmethod
    def name() -> str:
        return "atomic"

    @staticmethod
    def uniform(atoms: Sequence[complex]) -> 'Atomic':
        return Atomic(tuple(atoms), tuple([1.0 / len(atoms)] * len(atoms)))

    @property
    def support_radius(self) -> float:
        return max(abs(a) for a in self.atoms)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        atoms = np.array(self.atoms, dtype=np.complex128)
        idx = rng.choice(len(atoms), size=n, p=np.array(self.weights))
        return atoms[idx]

    def potential(self, z: ComplexLike) -> np.ndarray | float:
        z = _as_complex(z)
        total = np.zeros(z.shape)
        with np.errstate(divide="ignore"):
            for a, w in zip(self.atoms, self.weights):
                total = total + w * np.log(np.abs(z - a))
        return total[()]


@dataclass(frozen=True)
class Mixture(RootMeasure):
    components: tuple[RootMeasure, ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.components) == 0:
            raise ValueError("Invalid mixture: no components.")
        if len(self.components) != len(self.weights):
            raise ValueError("Invalid mixture: components and weights differ in length.")
        _check_weights(self.weights)
        object.__setattr__(self, "components", tuple(self.components))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    @staticmethod
    def name() -> str:
        return "mixture"

    @property
    def support_radius(self) -> float:
        return max(c.support_radius for c in self.components)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        labels = rng.choice(len(self.components), size=n, p=np.array(self.weights))
        out = np.empty(n, dtype=np.complex128)
        for k, component in enumerate(self.components):
            mask = labels == k
            count = int(mask.sum())
            if count > 0:
                out[mask] = component.sample(count, rng)
        return out

    def potential(self, z: ComplexLike) -> np.ndarray | float:
        z = _as_complex(z)
        total = np.zeros(z.shape)
        for component, w in zip(self.components, self.weights):
            total = total + w * np.asarray(component.potential(z))
        return total[()]


def sample_roots(measure: RootMeasure, n: int, stream: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise ValueError("Invalid number of roots.")
    return measure.sample(n, stream)


def potential(measure: RootMeasure, z: ComplexLike) -> np.ndarray | float:
    return measure.potential(z)


def support_radius(measure: RootMeasure) -> float:
    return measure.support_radius


def unity_roots(k: int, twist: bool = False) -> Atomic:
    """
    Uniform measure on the k-th roots of 1, or of -1 when `twist` is set.

    k = 2 gives {±1} and {±i}. Pairing the plain and twisted measures of
    the same k yields a limit density with tails decaying as d^(-k-1).
    """
    if k < 1:
        raise ValueError("Invalid number of roots of unity.")
    offset = math.pi / k if twist else 0.0
    atoms = [complex(math.cos(offset + 2 * math.pi * j / k), math.sin(offset + 2 * math.pi * j / k))
             for j in range(k)]
    return Atomic.uniform(atoms)


def _complex_from(value) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    re, im = value
    return complex(re, im)


def measure_from_spec(spec: dict) -> RootMeasure:
    """
    Build a measure from its configuration entry.

    -- PARAMETERS --
    spec: A dict with a "kind" key. Complex numbers are written as [re, im].
    """
    kind = spec.get("kind")
    if kind == UniformDisk.name():
        return UniformDisk(_complex_from(spec["center"]), float(spec["radius"]))
    elif kind == UniformCircle.name():
        return UniformCircle(_complex_from(spec["center"]), float(spec["radius"]))
    elif kind == Atomic.name():
        atoms = [_complex_from(a) for a in spec["atoms"]]
        weights = spec.get("weights")
        if weights is None:
            return Atomic.uniform(atoms)
        return Atomic(tuple(atoms), tuple(float(w) for w in weights))
    elif kind == Mixture.name():
        components = tuple(measure_from_spec(c) for c in spec["components"])
        return Mixture(components, tuple(float(w) for w in spec["weights"]))
    elif kind == "unityRoots":
        return unity_roots(int(spec["k"]), bool(spec.get("twist", False)))
    else:
        raise ValueError(f"Invalid measure kind: {kind!r}.")


def measure_to_spec(measure: RootMeasure) -> dict:
    def pair(z: complex) -> list[float]:
        return [z.real, z.imag]

    if isinstance(measure, (UniformDisk, UniformCircle)):
        return {"kind": measure.name(), "center": pair(measure.center), "radius": measure.radius}
    elif isinstance(measure, Atomic):
        return {"kind": measure.name(), "atoms": [pair(a) for a in measure.atoms],
                "weights": list(measure.weights)}
    elif isinstance(measure, Mixture):
        return {"kind": measure.name(), "components": [measure_to_spec(c) for c in measure.components],
                "weights": list(measure.weights)}
    else:
        assert False
