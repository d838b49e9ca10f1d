import logging
from typing import Optional

import numpy as np

from errors import InvalidArgumentError
from schemas.models import Instance

logger = logging.getLogger(__name__)

CUSTOMER_LOW, CUSTOMER_HIGH = 1.0, 100.0
DEPOT_LOW, DEPOT_HIGH = 0.0, 1.0


def check_size(n: int, alpha: float) -> None:
    if n < 2:
        raise InvalidArgumentError(f"n must be >= 2, got {n}")
    if not alpha >= 1:
        raise InvalidArgumentError(f"alpha must be >= 1, got {alpha}")


def generate_uniform(n: int, alpha: float, rng: np.random.Generator, seed: Optional[int] = None) -> Instance:
    """Customers uniform on [1,100]^2, depot uniform on [0,1]^2 near the corner."""
    check_size(n, alpha)
    depot = rng.uniform(DEPOT_LOW, DEPOT_HIGH, size=2)
    customers = rng.uniform(CUSTOMER_LOW, CUSTOMER_HIGH, size=(n - 1, 2))
    points = np.vstack([depot[None, :], customers])
    return Instance.from_points(points.tolist(), alpha=alpha, seed=seed)


def uniform_set(n: int, count: int, alpha: float, seed: int) -> list[Instance]:
    """`count` instances; instance i uses its own stream derived from (seed, i)."""
    return [generate_uniform(n, alpha, np.random.default_rng([seed, i]), seed=seed) for i in range(count)]
