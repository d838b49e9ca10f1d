"""Lockstep batched episodes driven by the policy.

Every step makes a truck decision and then a drone decision for the whole batch,
threading one recurrent state through both. Finished episodes keep stepping the
decoder with a depot-only mask; their log-probabilities are exactly zero.
"""

import logging
from dataclasses import dataclass
from typing import Literal, Optional, Sequence

import numpy as np

from env.mdp import Action, Mode, TspdEnv
from env.plan import PlanRecorder
from errors import ContractViolationError, IllegalActionError, TrainingDivergenceError
from instances.geometry import travel_times
from neural.autograd import Tensor
from neural.model import DecoderState, batch_coordinates, decode_step, encode
from neural.parameters import BoundParameters
from schemas.models import DEPOT, Instance, ModelConfig, Plan

logger = logging.getLogger(__name__)

Strategy = Literal["greedy", "sample", "forced"]


@dataclass
class RolloutResult:
    log_probs: Tensor  # (B,) summed log-probability of the chosen actions
    costs: np.ndarray  # (B,) raw makespans, penalties included
    plans: list[Plan]

    @property
    def actions(self) -> list[list[tuple[int, int]]]:
        return [plan.actions for plan in self.plans]


def choose(logp: np.ndarray, mask: np.ndarray, strategy: Strategy, rng: Optional[np.random.Generator]) -> np.ndarray:
    """Greedy takes the first maximum; sampling inverts the cumulative distribution."""
    if strategy == "greedy":
        return np.argmax(np.where(mask, logp, -np.inf), axis=1)
    if rng is None:
        raise ContractViolationError("sampling needs a generator")
    probs = np.where(mask, np.exp(logp), 0.0)
    cdf = np.cumsum(probs, axis=1)
    u = rng.random(probs.shape[0]) * cdf[:, -1]
    # right-sided search: zero-probability entries can never be hit
    picks = (cdf <= u[:, None]).sum(axis=1)
    return np.minimum(picks, probs.shape[1] - 1)


def _check_finite(logp: np.ndarray, mask: np.ndarray, step: int, vehicle: str) -> None:
    if np.isnan(logp[mask]).any():
        bad = np.flatnonzero(np.isnan(np.where(mask, logp, 0.0)).any(axis=1))
        raise TrainingDivergenceError(
            f"NaN probabilities at step {step} ({vehicle} decision)",
            diagnostics={"step": step, "vehicle": vehicle, "episodes": bad.tolist()},
        )


def rollout(
    w: BoundParameters,
    config: ModelConfig,
    instances: Sequence[Instance],
    strategy: Strategy = "greedy",
    rng: Optional[np.random.Generator] = None,
    training: bool = False,
    mode: Mode | str = Mode.NO_REVISIT,
    forced: Optional[Sequence[Sequence[tuple[int, int]]]] = None,
) -> RolloutResult:
    if not instances:
        raise ContractViolationError("rollout needs at least one instance")
    if strategy == "forced" and (forced is None or len(forced) != len(instances)):
        raise ContractViolationError("forced rollouts need one action list per instance")
    B = len(instances)
    n = instances[0].n
    enc = encode(w, batch_coordinates(list(instances)), config, training)
    envs = [TspdEnv(inst, mode) for inst in instances]
    times = [travel_times(inst) for inst in instances]
    truck = np.stack([t.truck / t.scale for t in times])
    drone = np.stack([t.drone / t.scale for t in times])
    rows = np.arange(B)

    states = [env.reset()[0] for env in envs]
    recorders = [PlanRecorder(env.mode) for env in envs]
    active = np.ones(B, dtype=bool)
    dstate = DecoderState.zeros(B, config.hidden_dim)
    total = Tensor(np.zeros(B))
    depot_only = np.zeros(n, dtype=bool)
    depot_only[DEPOT] = True
    step = 0
    while active.any():
        # truck decision
        mask_tr = np.array([env.truck_mask(s) if on else depot_only for env, s, on in zip(envs, states, active)])
        here_tr = np.array([s.dest_truck for s in states])
        logp, dstate = decode_step(w, enc, dstate, here_tr, truck[rows, here_tr], mask_tr, config, training, rng)
        _check_finite(logp.data, mask_tr, step, "truck")
        a_tr = _pick(logp.data, mask_tr, strategy, rng, forced, step, active, 0)
        total = total + logp[rows, a_tr]

        # drone decision, conditioned on the truck's choice
        mask_dr = np.array(
            [env.drone_mask(s, int(a)) if on else depot_only for env, s, a, on in zip(envs, states, a_tr, active)]
        )
        here_dr = np.array([s.dest_drone for s in states])
        logp, dstate = decode_step(w, enc, dstate, here_dr, drone[rows, here_dr], mask_dr, config, training, rng)
        _check_finite(logp.data, mask_dr, step, "drone")
        a_dr = _pick(logp.data, mask_dr, strategy, rng, forced, step, active, 1)
        total = total + logp[rows, a_dr]

        for b in np.flatnonzero(active):
            action = Action(int(a_tr[b]), int(a_dr[b]))
            result = envs[b].advance(states[b], action.truck, action.drone)
            recorders[b].record(states[b], action, result)
            states[b] = result.state
            if result.terminal:
                active[b] = False
        step += 1

    costs = np.array([s.elapsed for s in states])
    return RolloutResult(log_probs=total, costs=costs, plans=[r.finish() for r in recorders])


def _pick(logp, mask, strategy, rng, forced, step, active, vehicle: int) -> np.ndarray:
    if strategy != "forced":
        return choose(logp, mask, strategy, rng)
    picks = np.full(mask.shape[0], DEPOT)
    for b in np.flatnonzero(active):
        if step >= len(forced[b]):
            raise IllegalActionError("the action sequence ends before the episode terminates", step=step)
        a = int(forced[b][step][vehicle])
        if not (0 <= a < mask.shape[1] and mask[b, a]):
            raise IllegalActionError(f"{'drone' if vehicle else 'truck'} action {a} is masked", step=step)
        picks[b] = a
    return picks
