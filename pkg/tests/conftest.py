import random

import numpy as np
import pytest

from hirotalax.core.fields import EXACT, FloatField
from hirotalax.schemas.chain import ChainSpec, Topology
from hirotalax.services.chain import spectrum_family

SAMPLE_POINTS = (1.7 + 0.4j, -2.1 + 1.3j, 0.6 - 2.4j, -1.2 - 1.9j, 2.6 + 0.2j)


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture
def np_rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def exact():
    return EXACT


@pytest.fixture
def flt():
    return FloatField(tolerance=1e-9)


@pytest.fixture
def points():
    return SAMPLE_POINTS


@pytest.fixture(scope="session")
def periodic2_families():
    return spectrum_family(ChainSpec(sites=2), 3, seed=1)


@pytest.fixture(scope="session")
def periodic3_families():
    return spectrum_family(ChainSpec(sites=3), 4, seed=2)


@pytest.fixture(scope="session")
def open1_families():
    spec = ChainSpec(sites=1, topology=Topology.OPEN, alpha=0.7, beta=1.3, xi=0.5)
    return spectrum_family(spec, 4, seed=3)


@pytest.fixture(scope="session")
def open2_families():
    spec = ChainSpec(sites=2, topology=Topology.OPEN, alpha=0.7, beta=1.3, xi=0.5)
    return spectrum_family(spec, 4, seed=4)


@pytest.fixture(scope="session")
def open2_diagonal_families():
    spec = ChainSpec(sites=2, topology=Topology.OPEN, alpha=0.7, beta=1.3, xi=0.0)
    return spectrum_family(spec, 4, seed=5)
