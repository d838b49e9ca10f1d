"""Optimal truck/drone split of a fixed visiting order.

Positions 0..L of a node sequence are the candidate combined nodes, where truck and
drone meet. An arc p -> q either moves both vehicles together (q = p + 1) or sends
the drone from p to one customer k and on to q while the truck drives the
remaining nodes between them. Arc cost is the later of the two arrivals; the
optimal split is the shortest path from 0 to L.
"""

import logging
from typing import Sequence

import numpy as np

from config import settings
from env.mdp import Action, DronePhase, TspdEnv
from env.plan import replay
from errors import ContractViolationError, ReplayMismatchError
from instances.geometry import TravelTimes, travel_times
from schemas.models import DEPOT, Assignment, Instance, Partition, PartitionLeg, Plan

logger = logging.getLogger(__name__)

_TRUCK, _DRONE = 0, 1


def check_sequence(nodes: Sequence[int], n: int) -> None:
    if len(nodes) < 2:
        raise ContractViolationError("a node sequence needs a start and an end")
    if any(not 0 <= v < n for v in nodes):
        raise ContractViolationError(f"node index out of range in {tuple(nodes)}")
    interior = list(nodes[1:-1])
    ends = {nodes[0], nodes[-1]}
    if len(set(interior)) != len(interior) or ends & set(interior):
        raise ContractViolationError(f"nodes repeat in {tuple(nodes)}")
    if nodes[0] == nodes[-1] and len(nodes) == 2:
        raise ContractViolationError("an empty tour has nothing to partition")


def check_tour(tour: Sequence[int], n: int) -> None:
    """A closed depot-to-depot tour visiting every customer once."""
    if len(tour) != n + 1 or tour[0] != DEPOT or tour[-1] != DEPOT:
        raise ContractViolationError(f"a tour must start and end at the depot and cover {n - 1} customers")
    if sorted(tour[1:-1]) != list(range(1, n)):
        raise ContractViolationError(f"tour {tuple(tour)} is not a permutation of the customers")


def truck_length(nodes: Sequence[int], times: TravelTimes) -> float:
    idx = np.asarray(nodes)
    return float(times.truck[idx[:-1], idx[1:]].sum())


def _ahead(key_a: tuple, key_b: tuple, tol: float) -> bool:
    """Strict order on (cost, sorties, assignment) with a cost tolerance."""
    if key_a[0] < key_b[0] - tol:
        return True
    if key_a[0] > key_b[0] + tol:
        return False
    return key_a[1:] < key_b[1:]


def partition_dp(nodes: Sequence[int], times: TravelTimes) -> Partition:
    """Cheapest split of a fixed node sequence into truck stops and drone sorties.

    Costs within `settings.tolerance` tie. Ties go to fewer sorties, then to the
    lexicographically smaller per-position labelling with TRUCK ordered before DRONE,
    so the earliest position that differs is kept on the truck.
    """
    nodes = tuple(int(v) for v in nodes)
    check_sequence(nodes, times.truck.shape[0])
    tol = settings.tolerance
    idx = np.asarray(nodes)
    t_tr = times.truck[np.ix_(idx, idx)]
    t_dr = times.drone[np.ix_(idx, idx)]
    L = len(nodes) - 1
    legs_tr = np.diagonal(t_tr, offset=1)
    S = np.concatenate([[0.0], np.cumsum(legs_tr)])
    # truck time saved by driving past position k instead of through it
    skip = np.zeros(L + 1)
    if L >= 2:
        k = np.arange(1, L)
        skip[1:L] = t_tr[k - 1, k] + t_tr[k, k + 1] - t_tr[k - 1, k + 1]

    cost = np.full(L + 1, np.inf)
    cost[0] = 0.0
    sorties = [0] * (L + 1)
    prefix: list[tuple] = [()] * (L + 1)
    parent: list[tuple] = [(-1, None)] * (L + 1)
    for q in range(1, L + 1):
        best_key = (cost[q - 1] + t_tr[q - 1, q], sorties[q - 1], prefix[q - 1] + (_TRUCK,))
        best_arc = (q - 1, None)
        if q >= 2:
            p, k = np.triu_indices(q, k=1)
            truck_leg = S[q] - S[p] - skip[k]
            drone_leg = t_dr[p, k] + t_dr[k, q]
            candidates = cost[p] + np.maximum(truck_leg, drone_leg)
            low = candidates.min()
            if low <= best_key[0] + tol:
                # the tolerance band is tiny, so ties are resolved in plain python
                for i in np.flatnonzero(candidates <= low + tol):
                    pi, ki = int(p[i]), int(k[i])
                    segment = tuple(_DRONE if pos == ki else _TRUCK for pos in range(pi + 1, q + 1))
                    key = (float(candidates[i]), sorties[pi] + 1, prefix[pi] + segment)
                    if _ahead(key, best_key, tol):
                        best_key, best_arc = key, (pi, ki)
        cost[q], sorties[q], prefix[q] = best_key
        parent[q] = best_arc

    legs = []
    q = L
    while q > 0:
        p, k = parent[q]
        legs.append(PartitionLeg(start=p, end=q, drone=k))
        q = p
    legs.reverse()
    assignment = tuple(Assignment.DRONE if a == _DRONE else Assignment.TRUCK for a in prefix[L][:-1])
    return Partition(tour=nodes, assignment=assignment, legs=tuple(legs), makespan=float(cost[L]))


def batch_partition_costs(sequences: np.ndarray, times: TravelTimes) -> np.ndarray:
    """Makespans of many node sequences of equal length, one per row.

    Same recursion as `partition_dp` without the tie-breaking bookkeeping.
    """
    B, width = sequences.shape
    L = width - 1
    truck, drone = np.asarray(times.truck), np.asarray(times.drone)
    t_tr = truck[sequences[:, :, None], sequences[:, None, :]]
    t_dr = drone[sequences[:, :, None], sequences[:, None, :]]
    rows = np.arange(L)
    S = np.concatenate([np.zeros((B, 1)), np.cumsum(t_tr[:, rows, rows + 1], axis=1)], axis=1)
    skip = np.zeros((B, L + 1))
    if L >= 2:
        k = np.arange(1, L)
        skip[:, 1:L] = t_tr[:, k - 1, k] + t_tr[:, k, k + 1] - t_tr[:, k - 1, k + 1]

    cost = np.empty((B, L + 1))
    cost[:, 0] = 0.0
    for q in range(1, L + 1):
        best = cost[:, q - 1] + t_tr[:, q - 1, q]
        if q >= 2:
            p, k = np.triu_indices(q, k=1)
            truck_leg = S[:, q, None] - S[:, p] - skip[:, k]
            drone_leg = t_dr[:, p, k] + t_dr[:, k, q]
            arcs = cost[:, p] + np.maximum(truck_leg, drone_leg)
            best = np.minimum(best, arcs.min(axis=1))
        cost[:, q] = best
    return cost[:, L]


def block_rows(width: int, cells: int = 2_000_000) -> int:
    """Rows per batch so that one gathered travel-time block stays near `cells` entries."""
    return max(1, cells // (width * width))


def concat_partitions(parts: Sequence[Partition]) -> Partition:
    """Joins partitions of consecutive segments that share their boundary node."""
    tour: list[int] = []
    assignment: list[Assignment] = []
    legs: list[PartitionLeg] = []
    makespan = 0.0
    for part in parts:
        if not tour:
            offset = 0
            tour.extend(part.tour)
        else:
            if tour[-1] != part.tour[0]:
                raise ContractViolationError("segments do not share a boundary node")
            offset = len(tour) - 1
            # the shared boundary is an interior truck node of the joined sequence
            assignment.append(Assignment.TRUCK)
            tour.extend(part.tour[1:])
        assignment.extend(part.assignment)
        for leg in part.legs:
            legs.append(
                PartitionLeg(
                    start=leg.start + offset,
                    end=leg.end + offset,
                    drone=None if leg.drone is None else leg.drone + offset,
                )
            )
        makespan += part.makespan
    return Partition(tour=tuple(tour), assignment=tuple(assignment), legs=tuple(legs), makespan=makespan)


def partition_actions(inst: Instance, partition: Partition) -> list[tuple[int, int]]:
    """Drives the environment through the legs of a closed-tour partition."""
    env = TspdEnv(inst)
    state, _ = env.reset()
    tour = partition.tour
    actions: list[tuple[int, int]] = []
    for leg in partition.legs:
        w = tour[leg.end]
        if leg.drone is None:
            result = env.step(state, Action(w, w))
            actions.append((w, w))
            state = result.state
            continue
        j = tour[leg.drone]
        path = [tour[i] for i in range(leg.start + 1, leg.end + 1) if i != leg.drone]
        launched = False
        while True:
            if state.rem_truck > 0:
                a_tr = state.dest_truck
            elif path:
                a_tr = path.pop(0)
            else:
                a_tr = w
            if state.rem_drone > 0:
                a_dr = state.dest_drone
            elif not launched:
                a_dr, launched = j, True
            elif state.drone_phase is DronePhase.TO_CUSTOMER:
                a_dr = w
            else:
                a_dr = state.dest_drone
            state = env.step(state, Action(a_tr, a_dr)).state
            actions.append((a_tr, a_dr))
            if state.drone_phase is DronePhase.MOUNTED and state.rem_truck == 0.0 and state.dest_truck == w:
                break
    if not env.is_terminal(state):
        raise ContractViolationError("partition legs do not complete the tour")
    return actions


def plan_from_partition(inst: Instance, partition: Partition, method: str = "partition") -> Plan:
    check_tour(partition.tour, inst.n)
    actions = partition_actions(inst, partition)
    plan = replay(inst, actions)
    if abs(plan.makespan - partition.makespan) > settings.tolerance:
        raise ReplayMismatchError(
            f"{method}: replayed makespan {plan.makespan} differs from partition makespan {partition.makespan}",
            method=method,
        )
    return plan


def solve_tour(inst: Instance, tour: Sequence[int], method: str = "partition") -> Plan:
    check_tour(tour, inst.n)
    return plan_from_partition(inst, partition_dp(tour, travel_times(inst)), method=method)
