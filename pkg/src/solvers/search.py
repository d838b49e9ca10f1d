"""Depth-first search over the full legal action tree of the environment.

Independent of the partition DP; used to cross-check it on small instances.
"""

import logging
import time

from config import settings
from env.mdp import MdpState, TspdEnv
from errors import SizeLimitError
from instances.geometry import travel_times
from schemas.models import DEPOT, Instance
from solvers.heuristics import nn_tour
from solvers.partition import truck_length

logger = logging.getLogger(__name__)

_PRUNE_EPS = 1e-12


def lower_bound(env: TspdEnv, s: MdpState) -> float:
    """Elapsed time plus the longest trip some vehicle must still make."""
    truck, drone = env.truck, env.drone
    bound = max(s.rem_truck + truck[s.dest_truck][DEPOT], s.rem_drone + drone[s.dest_drone][DEPOT])
    for c in env.unserved(s):
        by_truck = s.rem_truck + truck[s.dest_truck][c] + truck[c][DEPOT]
        by_drone = s.rem_drone + drone[s.dest_drone][c] + drone[c][DEPOT]
        bound = max(bound, min(by_truck, by_drone))
    return s.elapsed + bound


def mdp_search(inst: Instance) -> float:
    if inst.n > settings.search_max_nodes:
        raise SizeLimitError(f"exhaustive search is limited to n <= {settings.search_max_nodes}, got n={inst.n}")
    env = TspdEnv(inst)
    start = time.perf_counter()
    # riding the whole nearest-neighbour tour is always feasible
    best = truck_length(nn_tour(inst), travel_times(inst))
    table: dict[tuple, float] = {}
    expanded = 0

    def dfs(s: MdpState) -> None:
        nonlocal best, expanded
        if env.is_terminal(s):
            best = min(best, s.elapsed)
            return
        key = s.key()
        seen = table.get(key)
        if seen is not None and seen <= s.elapsed:
            return
        table[key] = s.elapsed
        if lower_bound(env, s) >= best - _PRUNE_EPS:
            return
        expanded += 1
        children = [env.advance(s, a.truck, a.drone).state for a in env.legal_pairs(s)]
        children.sort(key=lambda child: lower_bound(env, child))
        for child in children:
            dfs(child)

    state, _ = env.reset()
    dfs(state)
    logger.info(f"Search makespan {best:.4f} after {expanded} expansions in {time.perf_counter() - start:.2f}s")
    return best
