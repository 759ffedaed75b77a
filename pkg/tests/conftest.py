import numpy as np
import pytest

from qbc4sim.core.ensembles import COMPUTATIONAL, HADAMARD, preset
from qbc4sim.core.settings import get_settings, set_settings

ATOL = 1e-10


@pytest.fixture(autouse=True)
def isolated_settings():
    """Restore the process-wide settings after each test."""
    saved = get_settings()
    yield
    set_settings(saved)


@pytest.fixture
def mub2():
    return preset("mub2")


@pytest.fixture
def computational():
    return preset("computational")


@pytest.fixture
def known_pair():
    return COMPUTATIONAL, HADAMARD


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
