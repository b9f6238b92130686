import hypothesis
import numpy as np
import pytest

hypothesis.settings.register_profile(
    "default", max_examples=50, deadline=None, derandomize=True
)
hypothesis.settings.load_profile("default")


def rng_for(*key) -> np.random.Generator:
    """Deterministic generator derived from an integer key tuple."""
    return np.random.default_rng(list(key))


@pytest.fixture
def rng():
    return rng_for(20260809)
