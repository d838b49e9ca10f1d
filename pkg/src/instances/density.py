"""Kernel density model of customer locations, fitted per axis with Scott's rule."""

import logging
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from errors import DegenerateDensityError, InstanceFormatError
from instances.generators import check_size
from schemas.models import DensityModel, Instance

logger = logging.getLogger(__name__)


def scott_bandwidth(values: np.ndarray) -> float:
    m = values.shape[0]
    sigma = float(np.std(values, ddof=1))
    return sigma * m ** (-1.0 / 5.0)


def fit_density(points: Sequence[Sequence[float]]) -> DensityModel:
    xy = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if xy.shape[0] < 2:
        raise DegenerateDensityError(f"need at least 2 points to fit a density, got {xy.shape[0]}")
    if not np.all(np.isfinite(xy)):
        raise DegenerateDensityError("points must be finite")
    h_x = scott_bandwidth(xy[:, 0])
    h_y = scott_bandwidth(xy[:, 1])
    if not (h_x > 0 and h_y > 0):
        raise DegenerateDensityError("points have zero variance along an axis")
    logger.debug(f"Fitted density on {xy.shape[0]} points, bandwidths ({h_x:.4f}, {h_y:.4f})")
    return DensityModel(points=tuple(map(tuple, xy.tolist())), bandwidths=(h_x, h_y))


def sample_points(model: DensityModel, count: int, rng: np.random.Generator) -> np.ndarray:
    xy = np.asarray(model.points, dtype=np.float64)
    m = xy.shape[0]
    # x and y come from independent univariate kernels
    ix = rng.integers(m, size=count)
    iy = rng.integers(m, size=count)
    h_x, h_y = model.bandwidths
    x = xy[ix, 0] + rng.normal(0.0, h_x, size=count)
    y = xy[iy, 1] + rng.normal(0.0, h_y, size=count)
    return np.stack([x, y], axis=1)


def sample_density(
    model: DensityModel,
    n: int,
    rng: np.random.Generator,
    alpha: float = 2.0,
    seed: Optional[int] = None,
) -> Instance:
    """Depot and customers are all drawn from the same density."""
    check_size(n, alpha)
    return Instance.from_points(sample_points(model, n, rng).tolist(), alpha=alpha, seed=seed)


def load_points(path: str | Path) -> list[tuple[float, float]]:
    """Read an `x y` per line file; `#` lines are comments."""
    path = Path(path)
    points = []
    with path.open("r", encoding="utf-8") as handle:
        for number, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if len(tokens) != 2:
                raise InstanceFormatError(f"expected 'x y', got {len(tokens)} tokens", line=number, path=str(path))
            try:
                points.append((float(tokens[0]), float(tokens[1])))
            except ValueError:
                raise InstanceFormatError(f"non-numeric token in {line!r}", line=number, path=str(path))
    return points
