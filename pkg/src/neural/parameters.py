import logging
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from errors import ConfigurationError, ContractViolationError
from neural.autograd import Tensor
from schemas.models import ModelConfig

logger = logging.getLogger(__name__)

ACTOR, CRITIC = "actor", "critic"


@dataclass(frozen=True)
class ParameterSpec:
    name: str
    shape: tuple
    group: str
    fan_in: int
    init: str = "uniform"  # uniform | ones | zeros
    buffer: bool = False

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))


def _layer_specs(prefix: str, d: int, f: int) -> list[ParameterSpec]:
    specs = [ParameterSpec(f"{prefix}.attn.{p}.weight", (d, d), ACTOR, d) for p in ("q", "k", "v", "o")]
    for bn in ("bn1", "bn2"):
        specs += [
            ParameterSpec(f"{prefix}.{bn}.scale", (d,), ACTOR, d, "ones"),
            ParameterSpec(f"{prefix}.{bn}.shift", (d,), ACTOR, d, "zeros"),
            ParameterSpec(f"{prefix}.{bn}.running_mean", (d,), ACTOR, d, "zeros", buffer=True),
            ParameterSpec(f"{prefix}.{bn}.running_var", (d,), ACTOR, d, "ones", buffer=True),
        ]
        if bn == "bn1":
            specs += [
                ParameterSpec(f"{prefix}.ff.0.weight", (d, f), ACTOR, d),
                ParameterSpec(f"{prefix}.ff.0.bias", (f,), ACTOR, d),
                ParameterSpec(f"{prefix}.ff.1.weight", (f, d), ACTOR, f),
                ParameterSpec(f"{prefix}.ff.1.bias", (d,), ACTOR, f),
            ]
    return specs


def parameter_specs(config: ModelConfig) -> list[ParameterSpec]:
    d, f = config.hidden_dim, config.ff_width
    specs = [
        ParameterSpec("encoder.init.weight", (2, d), ACTOR, 2),
        ParameterSpec("encoder.init.bias", (d,), ACTOR, 2),
    ]
    for layer in range(config.layers):
        specs += _layer_specs(f"encoder.layers.{layer}", d, f)
    specs += [
        ParameterSpec("decoder.lstm.input.weight", (d, 4 * d), ACTOR, d),
        ParameterSpec("decoder.lstm.hidden.weight", (d, 4 * d), ACTOR, d),
        ParameterSpec("decoder.lstm.bias", (4 * d,), ACTOR, d),
        ParameterSpec("decoder.attn.graph.weight", (d, d), ACTOR, d),
        ParameterSpec("decoder.attn.hidden.weight", (d, d), ACTOR, d),
    ]
    if config.candidate_term:
        specs.append(ParameterSpec("decoder.attn.node.weight", (d, d), ACTOR, d))
    specs += [
        ParameterSpec("decoder.attn.time.weight", (1, d), ACTOR, 1),
        ParameterSpec("decoder.attn.v", (d, 1), ACTOR, d),
        ParameterSpec("critic.init.weight", (2, d), CRITIC, 2),
        ParameterSpec("critic.init.bias", (d,), CRITIC, 2),
        ParameterSpec("critic.attn.q.weight", (d, d), CRITIC, d),
        ParameterSpec("critic.attn.k.weight", (d, d), CRITIC, d),
        ParameterSpec("critic.attn.v.weight", (d, d), CRITIC, d),
        ParameterSpec("critic.head.0.weight", (d, d), CRITIC, d),
        ParameterSpec("critic.head.0.bias", (d,), CRITIC, d),
        ParameterSpec("critic.head.1.weight", (d, 1), CRITIC, d),
        ParameterSpec("critic.head.1.bias", (1,), CRITIC, d),
    ]
    return specs


@dataclass
class BoundParameters:
    """Trainable weights as graph leaves; buffers stay plain arrays shared with the owner."""

    weights: dict[str, Tensor]
    buffers: dict[str, np.ndarray]

    def __getitem__(self, name: str) -> Tensor:
        return self.weights[name]

    def gradients(self) -> dict[str, np.ndarray]:
        if all(t.grad is None for t in self.weights.values()):
            raise ContractViolationError("no gradients recorded; run backward on a traced loss first")
        return {
            name: np.zeros_like(t.data) if t.grad is None else t.grad
            for name, t in self.weights.items()
        }


class PolicyParameters:
    """All encoder, decoder and critic arrays, in a fixed order that defines the flat layout."""

    def __init__(self, config: ModelConfig, arrays: Optional[dict[str, np.ndarray]] = None):
        self.config = config
        self.specs = parameter_specs(config)
        self.arrays: dict[str, np.ndarray] = {}
        for spec in self.specs:
            if arrays is None or spec.name not in arrays:
                self.arrays[spec.name] = np.zeros(spec.shape)
                continue
            value = np.asarray(arrays[spec.name], dtype=np.float64)
            if value.shape != spec.shape:
                raise ConfigurationError(f"{spec.name}: expected shape {spec.shape}, got {value.shape}")
            self.arrays[spec.name] = value.copy()

    @classmethod
    def initialize(cls, config: ModelConfig, rng: np.random.Generator) -> "PolicyParameters":
        """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)); batch-norm scale 1 and shift 0."""
        params = cls(config)
        for spec in params.specs:
            if spec.init == "ones":
                params.arrays[spec.name] = np.ones(spec.shape)
            elif spec.init == "zeros":
                params.arrays[spec.name] = np.zeros(spec.shape)
            else:
                bound = 1.0 / np.sqrt(spec.fan_in)
                params.arrays[spec.name] = rng.uniform(-bound, bound, size=spec.shape)
        return params

    def __iter__(self) -> Iterator[tuple[str, np.ndarray]]:
        return ((spec.name, self.arrays[spec.name]) for spec in self.specs)

    def __getitem__(self, name: str) -> np.ndarray:
        return self.arrays[name]

    @property
    def size(self) -> int:
        return sum(spec.size for spec in self.specs)

    def trainable(self, group: Optional[str] = None) -> list[ParameterSpec]:
        return [s for s in self.specs if not s.buffer and (group is None or s.group == group)]

    # Flat layout
    def to_flat(self) -> np.ndarray:
        return np.concatenate([self.arrays[s.name].ravel() for s in self.specs])

    def load_flat(self, flat: np.ndarray) -> None:
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (self.size,):
            raise ConfigurationError(f"flat vector has {flat.size} entries, expected {self.size}")
        offset = 0
        for spec in self.specs:
            self.arrays[spec.name] = flat[offset : offset + spec.size].reshape(spec.shape).copy()
            offset += spec.size

    @classmethod
    def from_flat(cls, config: ModelConfig, flat: np.ndarray) -> "PolicyParameters":
        params = cls(config)
        params.load_flat(flat)
        return params

    def copy(self) -> "PolicyParameters":
        return PolicyParameters(self.config, self.arrays)

    def bind(self, requires_grad: bool = True) -> BoundParameters:
        weights = {
            s.name: Tensor(self.arrays[s.name], requires_grad=requires_grad) for s in self.specs if not s.buffer
        }
        # buffers are updated in place by training-mode batch norm
        buffers = {s.name: self.arrays[s.name] for s in self.specs if s.buffer}
        return BoundParameters(weights=weights, buffers=buffers)

    def flat_gradient(self, grads: dict[str, np.ndarray]) -> np.ndarray:
        """Gradient dictionary laid out like `to_flat`, with zeros for buffers."""
        return np.concatenate(
            [np.zeros(s.size) if s.buffer else np.asarray(grads[s.name]).ravel() for s in self.specs]
        )