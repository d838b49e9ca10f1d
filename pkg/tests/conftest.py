import numpy as np
import pytest

from instances.generators import generate_uniform
from schemas.models import Instance, ModelConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def two_node():
    """Customer 5 away from the depot; the drone at speed 2 serves it in 5.0."""
    return Instance.from_points([(0.0, 0.0), (5.0, 0.0)], alpha=2.0)


@pytest.fixture
def line3():
    return Instance.from_points([(0.0, 0.0), (10.0, 0.0), (20.0, 0.0)], alpha=2.0)


@pytest.fixture
def square():
    return Instance.from_points([(0.0, 0.0), (10.0, 10.0), (10.0, 0.0), (0.0, 10.0)], alpha=2.0)


@pytest.fixture
def tiny_config():
    return ModelConfig(hidden_dim=8, layers=2, heads=2, ff_dim=32)


def random_instance(n: int, seed: int, alpha: float = 2.0) -> Instance:
    return generate_uniform(n, alpha, np.random.default_rng([seed, n]), seed=seed)


@pytest.fixture
def make_instance():
    return random_instance
