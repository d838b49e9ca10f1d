import logging
from typing import Optional

import numpy as np

from errors import ConfigurationError
from neural.parameters import ACTOR, CRITIC, PolicyParameters

logger = logging.getLogger(__name__)


def clip_by_global_norm(grads: dict[str, np.ndarray], names: list[str], max_norm: Optional[float]) -> float:
    """Rescales the named gradients in place when their joint norm exceeds `max_norm`; returns the norm before clipping."""
    norm = float(np.sqrt(sum(float(np.sum(grads[k] * grads[k])) for k in names)))
    if max_norm and norm > max_norm:
        factor = max_norm / (norm + 1e-12)
        for k in names:
            grads[k] = grads[k] * factor
    return norm


def clip_groups(params: PolicyParameters, grads: dict[str, np.ndarray], max_norm: Optional[float]) -> dict[str, float]:
    return {
        group: clip_by_global_norm(grads, [s.name for s in params.trainable(group)], max_norm)
        for group in (ACTOR, CRITIC)
    }


class SGD:
    """Constant-rate gradient descent."""

    def __init__(self, learning_rate: float):
        if not learning_rate > 0:
            raise ConfigurationError("learning rate must be > 0")
        self.learning_rate = learning_rate

    def step(self, params: PolicyParameters, grads: dict[str, np.ndarray]) -> None:
        for spec in params.trainable():
            params.arrays[spec.name] = params.arrays[spec.name] - self.learning_rate * grads[spec.name]

    def state_dict(self) -> dict:
        return {}

    def load_state_dict(self, state: dict) -> None:
        pass


class Adam:
    def __init__(self, learning_rate: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if not learning_rate > 0:
            raise ConfigurationError("learning rate must be > 0")
        self.learning_rate = learning_rate
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: PolicyParameters, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        correction1 = 1.0 - self.beta1 ** self.t
        correction2 = 1.0 - self.beta2 ** self.t
        for spec in params.trainable():
            g = grads[spec.name]
            m = self.m.get(spec.name, np.zeros_like(g))
            v = self.v.get(spec.name, np.zeros_like(g))
            m = self.beta1 * m + (1.0 - self.beta1) * g
            v = self.beta2 * v + (1.0 - self.beta2) * g * g
            self.m[spec.name], self.v[spec.name] = m, v
            update = (m / correction1) / (np.sqrt(v / correction2) + self.eps)
            params.arrays[spec.name] = params.arrays[spec.name] - self.learning_rate * update

    def state_dict(self) -> dict:
        return {
            "t": self.t,
            "m": {k: v.copy() for k, v in self.m.items()},
            "v": {k: v.copy() for k, v in self.v.items()},
        }

    def load_state_dict(self, state: dict) -> None:
        self.t = state.get("t", 0)
        self.m = {k: v.copy() for k, v in state.get("m", {}).items()}
        self.v = {k: v.copy() for k, v in state.get("v", {}).items()}


def make_optimizer(name: str, learning_rate: float):
    if name == "sgd":
        return SGD(learning_rate)
    if name == "adam":
        return Adam(learning_rate)
    raise ConfigurationError(f"unknown optimizer {name!r}")
