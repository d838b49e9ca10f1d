from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from schemas.models import Instance


@dataclass(frozen=True, eq=False)
class TravelTimes:
    """Truck and drone travel-time matrices. Both are read-only."""

    truck: np.ndarray
    drone: np.ndarray

    @property
    def scale(self) -> float:
        """Largest truck time; used to normalize times for the network and the loss."""
        top = float(self.truck.max())
        return top if top > 0 else 1.0


def coordinate_array(inst: Instance) -> np.ndarray:
    return np.asarray(inst.coords, dtype=np.float64)


@lru_cache(maxsize=4096)
def travel_times(inst: Instance) -> TravelTimes:
    xy = coordinate_array(inst)
    diff = xy[:, None, :] - xy[None, :, :]
    truck = np.sqrt((diff ** 2).sum(axis=-1))
    # exact symmetry and a zero diagonal regardless of rounding
    truck = np.triu(truck, 1)
    truck = truck + truck.T
    drone = truck / inst.alpha
    truck.setflags(write=False)
    drone.setflags(write=False)
    return TravelTimes(truck=truck, drone=drone)


def normalized_coordinates(inst: Instance) -> np.ndarray:
    """Affine min-max map into the unit square, shared scale on both axes."""
    xy = coordinate_array(inst)
    low = xy.min(axis=0)
    span = float((xy.max(axis=0) - low).max())
    if span <= 0:
        span = 1.0
    return (xy - low) / span
