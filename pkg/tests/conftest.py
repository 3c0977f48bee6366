import numpy as np
import pytest

from puf_trng import PufParameters, sample_puf


@pytest.fixture(scope="session")
def default_instance():
    """The calibrated default device, sampled once per session."""
    return sample_puf(PufParameters())


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
