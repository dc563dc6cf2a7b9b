import numpy as np
import pytest

from drci import BasisSpec, Sample


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_sample(n: int, seed: int, dependent: bool = False) -> Sample:
    """Uniform sample; optionally makes (y, z) strongly dependent."""
    gen = np.random.default_rng(seed)
    x = gen.random(n)
    z = gen.random(n)
    if dependent:
        y = np.clip(z + 0.15 * gen.standard_normal(n), 1e-9, 1.0)
    else:
        y = gen.random(n)
    return Sample(x=x, y=y, z=z)


@pytest.fixture
def spec222() -> BasisSpec:
    return BasisSpec.tensor(2, 2, 2)


@pytest.fixture
def small_sample() -> Sample:
    return random_sample(60, seed=7)
