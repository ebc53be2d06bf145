import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def disc_points(draw, max_modulus=0.95):
    r = draw(st.floats(0.0, max_modulus, allow_nan=False))
    t = draw(st.floats(0.0, 2 * np.pi, allow_nan=False))
    return complex(r * np.cos(t), r * np.sin(t))


def poly_points(n, max_modulus=0.95):
    return st.lists(disc_points(max_modulus), min_size=n, max_size=n).map(lambda c: np.array(c, dtype=complex))


def random_disc(rng, shape, max_modulus=0.99):
    r = max_modulus * np.sqrt(rng.uniform(size=shape))
    return r * np.exp(2j * np.pi * rng.uniform(size=shape))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
