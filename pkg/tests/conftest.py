import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
SRC = ROOT / "src"
TESTS = ROOT / "tests"

for path in (SRC, TESTS):
    if str(path) not in sys.path:
        sys.path.insert(0, str(path))

import mesh_factory  # noqa: E402


@pytest.fixture(scope="session")
def torus():
    return mesh_factory.Torus()


@pytest.fixture(scope="session")
def holed_disc():
    return mesh_factory.HoledDisc()


@pytest.fixture(scope="session")
def plain_disc():
    return mesh_factory.HoledDisc(holes=())


@pytest.fixture(scope="session")
def annulus():
    return mesh_factory.solid_annulus()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
