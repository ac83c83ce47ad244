import numpy as np
import pytest

from poroseg import SyntheticSpec, generate


@pytest.fixture
def disc_layer():
    """Noise-free three-level disc with known pore ground truth."""
    return generate(SyntheticSpec(seed=42))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
