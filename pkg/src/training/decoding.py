import logging

import numpy as np

from env.mdp import Mode
from errors import InvalidArgumentError
from neural.parameters import PolicyParameters
from schemas.models import Instance, Plan
from training.rollout import rollout

logger = logging.getLogger(__name__)

SAMPLE_CHUNK = 256


def greedy_decode(inst: Instance, params: PolicyParameters, mode: Mode | str = Mode.NO_REVISIT) -> Plan:
    roll = rollout(params.bind(requires_grad=False), params.config, [inst], "greedy", mode=mode)
    return roll.plans[0]


def greedy_costs(instances: list[Instance], params: PolicyParameters, mode: Mode | str = Mode.NO_REVISIT) -> np.ndarray:
    """Greedy makespans for a batch of same-size instances, decoded together."""
    return rollout(params.bind(requires_grad=False), params.config, instances, "greedy", mode=mode).costs


def sample_decode(
    inst: Instance,
    params: PolicyParameters,
    samples: int,
    rng: np.random.Generator,
    mode: Mode | str = Mode.NO_REVISIT,
) -> Plan:
    """Best of `samples` independent sampled rollouts; ties go to the earliest sample."""
    if samples < 1:
        raise InvalidArgumentError(f"sample count must be >= 1, got {samples}")
    w = params.bind(requires_grad=False)
    best = None
    remaining = samples
    while remaining:
        size = min(SAMPLE_CHUNK, remaining)
        roll = rollout(w, params.config, [inst] * size, "sample", rng=rng, mode=mode)
        i = int(np.argmin(roll.costs))
        if best is None or roll.costs[i] < best.makespan:
            best = roll.plans[i]
        remaining -= size
    logger.debug(f"Sampled {samples} rollouts, best makespan {best.makespan:.4f}")
    return best
