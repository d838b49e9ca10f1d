"""The TSP-D decision process.

A step takes one destination for the truck and one for the drone, advances time to
the next arrival event and returns the elapsed increment. Legality is defined on
the (truck, drone) pair; the truck decides first, so the drone's mask is
conditioned on the truck's choice.

Rules, as enforced by `TspdEnv.violation`:

L1  a vehicle in transit keeps its destination.
L2  no visited customer is targeted again (default mode), nobody targets the
    customer the drone is flying to serve, and the depot stays closed to the
    truck while customers remain unserved.
L3  co-located vehicles with the same destination ride together at truck speed;
    a mounted drone never stays behind.
L4  a mounted drone picking another customer launches; after serving it picks a
    rendezvous (the truck's target, an unvisited customer or the depot), and from
    then on it may only hover or fly to the truck's target.
L5  a vehicle may stay only while the other one is moving; a truck holding its
    mounted drone may stay only to launch it to the last unserved customer.
L6  the step lasts as long as the shortest positive remaining time.
L7  the truck is never forced to wait.
"""

import enum
import logging
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from config import settings
from errors import ContractViolationError, IllegalActionError
from instances.geometry import travel_times
from schemas.models import DEPOT, Instance

logger = logging.getLogger(__name__)

# remaining times below this snap to an arrival
_ARRIVAL_EPS = 1e-12


class DronePhase(str, enum.Enum):
    MOUNTED = "mounted"
    TO_CUSTOMER = "to_customer"
    TO_RENDEZVOUS = "to_rendezvous"


class Mode(str, enum.Enum):
    NO_REVISIT = "no-revisit"
    REVISIT = "revisit"


@dataclass(frozen=True, slots=True)
class MdpState:
    visited: frozenset
    dest_truck: int
    dest_drone: int
    rem_truck: float
    rem_drone: float
    drone_phase: DronePhase
    elapsed: float
    step_index: int
    truncated: bool = False

    @property
    def truck_at_node(self) -> bool:
        return self.rem_truck == 0.0

    @property
    def drone_at_node(self) -> bool:
        return self.rem_drone == 0.0

    @property
    def pending_customer(self) -> Optional[int]:
        """Customer the drone is flying to serve, if any."""
        if self.drone_phase is DronePhase.TO_CUSTOMER and not self.drone_at_node:
            return self.dest_drone
        return None

    def key(self) -> tuple:
        return (self.visited, self.dest_truck, self.dest_drone, self.rem_truck, self.rem_drone, self.drone_phase)


@dataclass(frozen=True, slots=True)
class Action:
    truck: int
    drone: int


@dataclass(frozen=True, slots=True)
class Mask:
    truck_legal: np.ndarray
    drone_legal: np.ndarray


@dataclass(frozen=True, slots=True)
class StepResult:
    state: MdpState
    cost: float
    terminal: bool


class TspdEnv:
    def __init__(self, inst: Instance, mode: Mode | str = Mode.NO_REVISIT):
        self.inst = inst
        self.n = inst.n
        self.mode = Mode(mode)
        self.revisit = self.mode is Mode.REVISIT
        times = travel_times(inst)
        # nested lists are much faster than numpy scalar indexing in the step loop
        self.truck = times.truck.tolist()
        self.drone = times.drone.tolist()
        self.step_limit = settings.revisit_step_factor * self.n
        self.penalty = settings.revisit_penalty

    # Episode control
    def reset(self) -> tuple[MdpState, Mask]:
        state = MdpState(
            visited=frozenset({DEPOT}),
            dest_truck=DEPOT,
            dest_drone=DEPOT,
            rem_truck=0.0,
            rem_drone=0.0,
            drone_phase=DronePhase.MOUNTED,
            elapsed=0.0,
            step_index=0,
        )
        return state, self.legal_actions(state)

    def is_terminal(self, s: MdpState) -> bool:
        if s.truncated:
            return True
        return (
            len(s.visited) == self.n
            and s.rem_truck == 0.0
            and s.rem_drone == 0.0
            and s.dest_truck == DEPOT
            and s.dest_drone == DEPOT
        )

    # Legality
    def unserved(self, s: MdpState, *exclude: Optional[int]) -> list[int]:
        skip = {c for c in exclude if c is not None}
        pending = s.pending_customer
        return [c for c in range(1, self.n) if c not in s.visited and c != pending and c not in skip]

    def violation(self, s: MdpState, a_tr: int, a_dr: int) -> Optional[str]:
        """The first rule the pair breaks, or None when it is legal."""
        n = self.n
        if not (0 <= a_tr < n and 0 <= a_dr < n):
            return f"node indices must lie in [0, {n})"
        truck_at_node = s.rem_truck == 0.0
        drone_at_node = s.rem_drone == 0.0
        pending = s.pending_customer

        if not truck_at_node:
            if a_tr != s.dest_truck:
                return f"L1: the truck is in transit and must continue to node {s.dest_truck}"
        elif a_tr != s.dest_truck and a_tr != DEPOT:
            if a_tr == pending:
                return f"L2: node {a_tr} is being served by the drone"
            if not self.revisit and a_tr in s.visited:
                return f"L2: node {a_tr} was already visited"

        truck_target = s.dest_truck if not truck_at_node else a_tr
        riding = False
        launch = None
        if not drone_at_node:
            if a_dr != s.dest_drone:
                return f"L1: the drone is in transit and must continue to node {s.dest_drone}"
        elif s.drone_phase is DronePhase.MOUNTED:
            here = s.dest_drone
            if a_dr == a_tr and a_tr != here:
                riding = True
            elif a_dr == here:
                if a_tr != here:
                    return "L3: a mounted drone either rides with the truck or launches to a customer"
            elif a_dr == DEPOT:
                return "L4: a launched drone must serve a customer"
            elif not self.revisit and a_dr in s.visited:
                return f"L2: node {a_dr} was already visited"
            else:
                launch = a_dr
        elif s.drone_phase is DronePhase.TO_CUSTOMER:
            if a_dr not in (s.dest_drone, truck_target, DEPOT) and not self.revisit and a_dr in s.visited:
                return "L4: the rendezvous must be the truck's target, an unvisited customer or the depot"
        elif a_dr not in (s.dest_drone, truck_target):
            return f"L4: the drone may only wait or fly to the truck's target {truck_target}"

        if truck_at_node and a_tr == DEPOT and s.dest_truck != DEPOT and self.unserved(s, launch):
            return "L2: the depot stays closed while customers are unserved"

        r_tr = s.rem_truck + self.truck[s.dest_truck][a_tr]
        r_dr = r_tr if riding else s.rem_drone + self.drone[s.dest_drone][a_dr]
        if truck_at_node and a_tr == s.dest_truck:
            if not r_dr > 0:
                return "L5: the truck may only wait while the drone is moving"
            if launch is not None and self.unserved(s, launch):
                return "L5: the truck may hold a launch only for the last unserved customer"
        if drone_at_node and a_dr == s.dest_drone and not riding and not r_tr > 0:
            return "L5: the drone may only wait while the truck is moving"
        return None

    def _truck_candidates(self, s: MdpState) -> Iterable[int]:
        if s.rem_truck > 0:
            return (s.dest_truck,)
        return range(self.n)

    def _drone_candidates(self, s: MdpState, a_tr: int) -> Iterable[int]:
        if s.rem_drone > 0:
            return (s.dest_drone,)
        if s.drone_phase is DronePhase.MOUNTED:
            # riding first: it settles most truck choices in one check
            return (a_tr, *range(1, self.n))
        if s.drone_phase is DronePhase.TO_RENDEZVOUS:
            target = s.dest_truck if s.rem_truck > 0 else a_tr
            return (s.dest_drone, target)
        return range(self.n)

    def truck_mask(self, s: MdpState) -> np.ndarray:
        if self.is_terminal(s):
            raise ContractViolationError("no legal actions in a terminal state")
        mask = np.zeros(self.n, dtype=bool)
        for a_tr in self._truck_candidates(s):
            if any(self.violation(s, a_tr, a_dr) is None for a_dr in self._drone_candidates(s, a_tr)):
                mask[a_tr] = True
        return mask

    def drone_mask(self, s: MdpState, a_tr: int) -> np.ndarray:
        if self.is_terminal(s):
            raise ContractViolationError("no legal actions in a terminal state")
        mask = np.zeros(self.n, dtype=bool)
        for a_dr in self._drone_candidates(s, a_tr):
            if self.violation(s, a_tr, a_dr) is None:
                mask[a_dr] = True
        return mask

    def legal_actions(self, s: MdpState, truck_action: Optional[int] = None) -> Mask:
        if self.is_terminal(s):
            return Mask(np.zeros(self.n, dtype=bool), np.zeros(self.n, dtype=bool))
        truck = self.truck_mask(s)
        if truck_action is not None:
            return Mask(truck, self.drone_mask(s, truck_action))
        drone = np.zeros(self.n, dtype=bool)
        for a_tr in np.flatnonzero(truck):
            drone |= self.drone_mask(s, int(a_tr))
        return Mask(truck, drone)

    def legal_pairs(self, s: MdpState) -> list[Action]:
        pairs = []
        for a_tr in self._truck_candidates(s):
            for a_dr in self._drone_candidates(s, a_tr):
                if self.violation(s, a_tr, a_dr) is None:
                    pairs.append(Action(a_tr, a_dr))
        # riding and launching may both list the same pair
        return list(dict.fromkeys(pairs))

    # Dynamics
    def step(self, s: MdpState, action: Action) -> StepResult:
        if self.is_terminal(s):
            raise ContractViolationError("step called on a terminal state")
        rule = self.violation(s, action.truck, action.drone)
        if rule is not None:
            raise IllegalActionError(rule, step=s.step_index)
        return self.advance(s, action.truck, action.drone)

    def advance(self, s: MdpState, a_tr: int, a_dr: int) -> StepResult:
        """Time advance for a pair already known to be legal."""
        riding = (
            s.drone_phase is DronePhase.MOUNTED
            and s.rem_drone == 0.0
            and a_dr == a_tr
            and a_tr != s.dest_drone
        )
        r_tr = s.rem_truck + self.truck[s.dest_truck][a_tr]
        r_dr = r_tr if riding else s.rem_drone + self.drone[s.dest_drone][a_dr]
        positive = [r for r in (r_tr, r_dr) if r > 0]
        cost = min(positive) if positive else 0.0
        rem_tr = r_tr - cost
        rem_dr = r_dr - cost
        if rem_tr < _ARRIVAL_EPS:
            rem_tr = 0.0
        if rem_dr < _ARRIVAL_EPS:
            rem_dr = 0.0

        phase = s.drone_phase
        if phase is DronePhase.MOUNTED and not riding and a_dr != s.dest_drone:
            phase = DronePhase.TO_CUSTOMER
        elif phase is DronePhase.TO_CUSTOMER and s.rem_drone == 0.0 and a_dr != s.dest_drone:
            phase = DronePhase.TO_RENDEZVOUS

        visited = s.visited
        arrivals = []
        if rem_tr == 0.0:
            arrivals.append(a_tr)
        if rem_dr == 0.0 and phase is DronePhase.TO_CUSTOMER:
            arrivals.append(a_dr)
        if arrivals:
            visited = visited.union(arrivals)
        if rem_tr == 0.0 and rem_dr == 0.0 and a_tr == a_dr:
            phase = DronePhase.MOUNTED

        step_index = s.step_index + 1
        nxt = MdpState(
            visited=visited,
            dest_truck=a_tr,
            dest_drone=a_dr,
            rem_truck=rem_tr,
            rem_drone=rem_dr,
            drone_phase=phase,
            elapsed=s.elapsed + cost,
            step_index=step_index,
        )
        terminal = self.is_terminal(nxt)
        if self.revisit and not terminal and step_index >= self.step_limit:
            cost += self.penalty
            nxt = MdpState(
                visited=visited,
                dest_truck=a_tr,
                dest_drone=a_dr,
                rem_truck=rem_tr,
                rem_drone=rem_dr,
                drone_phase=phase,
                elapsed=nxt.elapsed + self.penalty,
                step_index=step_index,
                truncated=True,
            )
            terminal = True
            logger.debug(f"Episode truncated after {step_index} steps")
        return StepResult(state=nxt, cost=cost, terminal=terminal)
