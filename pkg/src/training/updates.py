"""Policy-gradient updates with a learned baseline.

The actor descends mean((C - b) * log pi) and the critic descends mean((C - b)^2),
with episode costs C divided by the instance's largest truck time.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from env.mdp import Mode
from instances.geometry import travel_times
from neural.autograd import Tensor
from neural.model import batch_coordinates, critic_value
from neural.parameters import PolicyParameters
from schemas.models import Instance
from training.optim import clip_groups
from training.rollout import RolloutResult, rollout

logger = logging.getLogger(__name__)


@dataclass
class UpdateResult:
    mean_cost: float
    actor_loss: float
    critic_loss: float
    grad_norms: dict[str, float]


def cost_scales(instances: Sequence[Instance]) -> np.ndarray:
    return np.array([travel_times(inst).scale for inst in instances])


def policy_gradient_loss(roll: RolloutResult, baseline: Tensor, scales: np.ndarray) -> tuple[Tensor, Tensor]:
    costs = roll.costs / scales
    advantage = Tensor(costs - baseline.data)
    actor = (advantage * roll.log_probs).mean()
    gap = Tensor(costs) - baseline
    critic = (gap * gap).mean()
    return actor, critic


def reinforce_update(
    params: PolicyParameters,
    optimizer,
    instances: Sequence[Instance],
    rng: np.random.Generator,
    clip_norm: Optional[float] = 1.0,
    mode: Mode | str = Mode.NO_REVISIT,
) -> UpdateResult:
    """One sampled batch, one gradient step on actor and critic together."""
    config = params.config
    w = params.bind(requires_grad=True)
    roll = rollout(w, config, instances, "sample", rng=rng, training=True, mode=mode)
    baseline = critic_value(w, batch_coordinates(list(instances)), config)
    actor, critic = policy_gradient_loss(roll, baseline, cost_scales(instances))
    (actor + critic).backward()
    grads = w.gradients()
    norms = clip_groups(params, grads, clip_norm)
    optimizer.step(params, grads)
    return UpdateResult(
        mean_cost=float(roll.costs.mean()),
        actor_loss=actor.item(),
        critic_loss=critic.item(),
        grad_norms=norms,
    )


# same gradient math; the trainers differ only in how workers are scheduled
a2c_update = reinforce_update
