"""Tour construction and partition-based local search baselines."""

import logging
import time
from typing import Optional, Sequence

import numpy as np

from config import settings
from errors import InvalidArgumentError
from instances.geometry import TravelTimes, travel_times
from schemas.models import DEPOT, Instance, Partition, Plan
from solvers.partition import (
    batch_partition_costs,
    block_rows,
    concat_partitions,
    partition_dp,
    plan_from_partition,
    truck_length,
)

logger = logging.getLogger(__name__)

_TWO_OPT_EPS = 1e-10


def nn_tour(inst: Instance) -> tuple[int, ...]:
    """Nearest-neighbour tour from the depot; ties go to the lowest index."""
    truck = travel_times(inst).truck
    open_ = np.ones(inst.n, dtype=bool)
    open_[DEPOT] = False
    tour = [DEPOT]
    for _ in range(inst.n - 1):
        row = np.where(open_, truck[tour[-1]], np.inf)
        nxt = int(np.argmin(row))
        tour.append(nxt)
        open_[nxt] = False
    tour.append(DEPOT)
    return tuple(tour)


def two_opt(path: Sequence[int], times: TravelTimes) -> tuple[int, ...]:
    """First-improvement 2-opt on truck time; both end nodes stay in place."""
    route = [int(v) for v in path]
    d = times.truck.tolist()
    last = len(route) - 1
    improved = True
    while improved:
        improved = False
        for i in range(0, last - 2):
            a, b = route[i], route[i + 1]
            for j in range(i + 2, last):
                c, e = route[j], route[j + 1]
                delta = d[a][c] + d[b][e] - d[a][b] - d[c][e]
                if delta < -_TWO_OPT_EPS:
                    route[i + 1 : j + 1] = route[i + 1 : j + 1][::-1]
                    logger.debug(f"2-opt reversed positions {i + 1}..{j}, gain {-delta:.4f}")
                    improved = True
                    break
            if improved:
                break
    return tuple(route)


def two_opt_moves(length: int) -> list[tuple[int, int]]:
    """Reversal moves (i, j) of a sequence with `length` nodes, in scan order."""
    last = length - 1
    return [(i, j) for i in range(0, last - 2) for j in range(i + 2, last)]


def default_budget(nodes: Sequence[int]) -> int:
    distinct = len(set(nodes))
    return settings.ep_all_budget_factor * distinct * distinct


def improve_partition(nodes: Sequence[int], times: TravelTimes, budget: Optional[int] = None) -> Partition:
    """Partition-aware 2-opt: take the first neighbour whose partitioned makespan is strictly lower.

    Every evaluated neighbour consumes one unit of `budget`.
    """
    if budget is None:
        budget = default_budget(nodes)
    if budget < 0:
        raise InvalidArgumentError(f"budget must be >= 0, got {budget}")
    route = np.asarray(nodes, dtype=np.int64)
    current = partition_dp(route, times).makespan
    moves = two_opt_moves(route.shape[0])
    rows = block_rows(route.shape[0])
    used = 0
    accepted = 0
    while used < budget and moves:
        found = None
        for lo in range(0, len(moves), rows):
            block = moves[lo : lo + min(rows, budget - used)]
            if not block:
                break
            neighbours = np.repeat(route[None, :], len(block), axis=0)
            for r, (i, j) in enumerate(block):
                neighbours[r, i + 1 : j + 1] = route[i + 1 : j + 1][::-1]
            costs = batch_partition_costs(neighbours, times)
            better = np.flatnonzero(costs < current - settings.tolerance)
            if better.size:
                hit = int(better[0])
                used += hit + 1
                found = neighbours[hit]
                current = float(costs[hit])
                break
            used += len(block)
            if used >= budget:
                break
        if found is None:
            break
        route = found
        accepted += 1
    logger.debug(f"Partition search accepted {accepted} moves using {used} evaluations")
    return partition_dp(route, times)


def tsp_ep(inst: Instance) -> Plan:
    times = travel_times(inst)
    tour = two_opt(nn_tour(inst), times)
    return plan_from_partition(inst, partition_dp(tour, times), method="ep")


def tsp_ep_all(inst: Instance, budget: Optional[int] = None) -> Plan:
    start = time.perf_counter()
    times = travel_times(inst)
    tour = two_opt(nn_tour(inst), times)
    partition = improve_partition(tour, times, budget)
    plan = plan_from_partition(inst, partition, method="ep-all")
    logger.info(
        f"TSP-ep-all n={inst.n}: makespan {plan.makespan:.4f} "
        f"(tour {truck_length(tour, times):.4f}) in {time.perf_counter() - start:.2f}s"
    )
    return plan


def group_segments(tour: Sequence[int], g: int) -> list[tuple[int, ...]]:
    """Cuts a tour at every g-th position; neighbouring segments share their boundary node."""
    last = len(tour) - 1
    cuts = list(range(0, last, g)) + [last]
    return [tuple(tour[a : b + 1]) for a, b in zip(cuts[:-1], cuts[1:])]


def dps(inst: Instance, g: int, budget: Optional[int] = None) -> Plan:
    """Divide the tour into groups of g positions, partition-search each, and join them."""
    if not 2 <= g <= inst.n:
        raise InvalidArgumentError(f"group size must lie in [2, {inst.n}], got {g}")
    start = time.perf_counter()
    times = travel_times(inst)
    tour = two_opt(nn_tour(inst), times)
    parts = [improve_partition(segment, times, budget) for segment in group_segments(tour, g)]
    plan = plan_from_partition(inst, concat_partitions(parts), method=f"dps{g}")
    logger.info(
        f"DPS/{g} n={inst.n}: {len(parts)} groups, makespan {plan.makespan:.4f} "
        f"in {time.perf_counter() - start:.2f}s"
    )
    return plan
