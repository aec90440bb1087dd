import json
from pathlib import Path

import numpy as np
import pytest

from zeros.measures import UniformCircle, UniformDisk, unity_roots

SRC = Path(__file__).parent.parent.joinpath("src")


@pytest.fixture
def disks():
    """Uniform measures on the unit disks centred at 1 and -1."""
    return UniformDisk(1.0, 1.0), UniformDisk(-1.0, 1.0)


@pytest.fixture
def circles():
    """Uniform measures on the centred circles of radii 1 and 2."""
    return UniformCircle(0j, 1.0), UniformCircle(0j, 2.0)


@pytest.fixture
def lines():
    """Uniform measures on {1, -1} and {i, -i}."""
    return unity_roots(2), unity_roots(2, twist=True)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def default_doc():
    with SRC.joinpath("config.json").open(encoding="utf-8") as file:
        return json.load(file)


@pytest.fixture
def write_config(tmp_path):
    """Write a configuration document and return its path."""
    def write(doc: dict, name: str = "config.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(doc), encoding="utf-8")
        return path
    return write
