"""Exhaustive visiting-order enumeration on top of the partition DP."""

import itertools
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Iterator, Optional

import numpy as np
from tqdm import tqdm

from config import settings
from errors import SizeLimitError
from instances.geometry import TravelTimes, travel_times
from schemas.models import DEPOT, Instance, Plan
from solvers.partition import batch_partition_costs, solve_tour

logger = logging.getLogger(__name__)


def _orders(customers: tuple[int, ...], first: int) -> Iterator[tuple[int, ...]]:
    rest = tuple(c for c in customers if c != first)
    for tail in itertools.permutations(rest):
        yield (first, *tail)


def _search_first(first: int, n: int, times: TravelTimes, chunk: int) -> tuple[float, Optional[tuple]]:
    """Best order among those starting with `first`, skipping mirrored tours."""
    stream = _orders(tuple(range(1, n)), first)
    best_cost, best_order = np.inf, None
    while True:
        block = list(itertools.islice(stream, chunk))
        if not block:
            break
        orders = np.asarray(block, dtype=np.int64)
        if orders.shape[1] >= 2:
            # a tour and its reversal share a makespan
            orders = orders[orders[:, 0] < orders[:, -1]]
            if orders.shape[0] == 0:
                continue
        depot = np.full((orders.shape[0], 1), DEPOT, dtype=np.int64)
        costs = batch_partition_costs(np.hstack([depot, orders, depot]), times)
        i = int(np.argmin(costs))
        if costs[i] < best_cost - settings.tolerance:
            best_cost, best_order = float(costs[i]), tuple(int(v) for v in orders[i])
    return best_cost, best_order


def best_order(inst: Instance, jobs: int = 1, progress: bool = True) -> tuple[float, tuple[int, ...]]:
    times = travel_times(inst)
    chunk = settings.exact_chunk_size
    firsts = list(range(1, inst.n))
    results: list[tuple[float, Optional[tuple]]] = []
    bar = dict(total=len(firsts), desc="exact", unit="prefix", disable=None if progress else True, leave=False)
    if jobs > 1 and len(firsts) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_search_first, f, inst.n, times, chunk) for f in firsts]
            for future in tqdm(futures, **bar):
                results.append(future.result())
    else:
        for f in tqdm(firsts, **bar):
            results.append(_search_first(f, inst.n, times, chunk))

    # first-customer order is permutation order, so earlier winners keep ties
    best_cost, best = np.inf, None
    for cost, order in results:
        if order is not None and cost < best_cost - settings.tolerance:
            best_cost, best = cost, order
    return best_cost, best


def solve_exact(inst: Instance, jobs: int = 1, progress: bool = True) -> Plan:
    if inst.n > settings.exact_max_nodes:
        raise SizeLimitError(
            f"exact enumeration is limited to n <= {settings.exact_max_nodes}, got n={inst.n}"
        )
    logger.info(f"Exact solve for n={inst.n} with {jobs} job(s)")
    start = time.perf_counter()
    cost, order = best_order(inst, jobs=jobs, progress=progress)
    plan = solve_tour(inst, (DEPOT, *order, DEPOT), method="exact")
    logger.info(f"Exact makespan {plan.makespan:.4f} in {time.perf_counter() - start:.2f}s")
    return plan
