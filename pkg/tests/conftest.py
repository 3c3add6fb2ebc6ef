import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from bergmanlab.geometry import generate_lattice

settings.register_profile(
    "lab",
    derandomize=True,
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("lab")


@pytest.fixture(scope="session")
def lattice_half_r4():
    return generate_lattice(0.5, 4.0)


@pytest.fixture(scope="session")
def lattice_one_r4():
    return generate_lattice(1.0, 4.0)


@pytest.fixture(scope="session")
def lattice_one_r25():
    return generate_lattice(1.0, 2.5)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
