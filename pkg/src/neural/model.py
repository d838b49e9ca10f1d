"""Attention encoder, recurrent decoder and critic of the routing policy.

All functions work on batches: coordinates are (B, n, 2), node embeddings (B, n, d).
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from errors import ConfigurationError, ContractViolationError
from instances.geometry import normalized_coordinates
from neural.autograd import Tensor, masked_log_softmax, softmax
from neural.parameters import BoundParameters, PolicyParameters
from schemas.models import Instance, ModelConfig

logger = logging.getLogger(__name__)


@dataclass
class Encoding:
    nodes: Tensor  # (B, n, d)
    graph: Tensor  # (B, d), mean of node rows


@dataclass
class DecoderState:
    hidden: Tensor  # (B, d)
    cell: Tensor  # (B, d)

    @classmethod
    def zeros(cls, batch: int, d: int) -> "DecoderState":
        return cls(hidden=Tensor(np.zeros((batch, d))), cell=Tensor(np.zeros((batch, d))))


def batch_coordinates(instances: list[Instance]) -> np.ndarray:
    sizes = {inst.n for inst in instances}
    if len(sizes) != 1:
        raise ConfigurationError(f"a batch must share one instance size, got {sorted(sizes)}")
    return np.stack([normalized_coordinates(inst) for inst in instances])


def _check_input(coords: np.ndarray, config: ModelConfig) -> None:
    if coords.ndim != 3 or coords.shape[-1] != 2:
        raise ConfigurationError(f"coordinates must have shape (B, n, 2), got {coords.shape}")
    if config.hidden_dim % config.heads:
        raise ConfigurationError("hidden_dim must be divisible by heads")


# Encoder
def batch_norm(x: Tensor, w: BoundParameters, prefix: str, config: ModelConfig, training: bool) -> Tensor:
    scale, shift = w[f"{prefix}.scale"], w[f"{prefix}.shift"]
    running_mean = w.buffers[f"{prefix}.running_mean"]
    running_var = w.buffers[f"{prefix}.running_var"]
    if training:
        mu = x.mean(axis=(0, 1), keepdims=True)
        centered = x - mu
        var = (centered * centered).mean(axis=(0, 1), keepdims=True)
        normed = centered / (var + config.bn_eps) ** 0.5
        m = config.bn_momentum
        running_mean[...] = m * running_mean + (1.0 - m) * mu.data.reshape(-1)
        running_var[...] = m * running_var + (1.0 - m) * var.data.reshape(-1)
    else:
        normed = (x - running_mean) / np.sqrt(running_var + config.bn_eps)
    return normed * scale + shift


def multi_head_attention(x: Tensor, w: BoundParameters, prefix: str, heads: int) -> Tensor:
    B, n, d = x.shape
    dk = d // heads

    def split(t: Tensor) -> Tensor:
        return t.reshape(B, n, heads, dk).transpose(0, 2, 1, 3)

    q = split(x @ w[f"{prefix}.q.weight"])
    k = split(x @ w[f"{prefix}.k.weight"])
    v = split(x @ w[f"{prefix}.v.weight"])
    compat = (q @ k.transpose(0, 1, 3, 2)) * (1.0 / np.sqrt(dk))
    mixed = softmax(compat, axis=-1) @ v
    merged = mixed.transpose(0, 2, 1, 3).reshape(B, n, d)
    return merged @ w[f"{prefix}.o.weight"]


def encode(w: BoundParameters, coords: np.ndarray, config: ModelConfig, training: bool = False) -> Encoding:
    _check_input(coords, config)
    h = Tensor(coords) @ w["encoder.init.weight"] + w["encoder.init.bias"]
    for layer in range(config.layers):
        prefix = f"encoder.layers.{layer}"
        h = batch_norm(h + multi_head_attention(h, w, f"{prefix}.attn", config.heads), w, f"{prefix}.bn1", config, training)
        ff = (h @ w[f"{prefix}.ff.0.weight"] + w[f"{prefix}.ff.0.bias"]).relu()
        ff = ff @ w[f"{prefix}.ff.1.weight"] + w[f"{prefix}.ff.1.bias"]
        h = batch_norm(h + ff, w, f"{prefix}.bn2", config, training)
    return Encoding(nodes=h, graph=h.mean(axis=1))


# Decoder
def lstm_cell(x: Tensor, state: DecoderState, w: BoundParameters) -> DecoderState:
    d = x.shape[-1]
    gates = x @ w["decoder.lstm.input.weight"] + state.hidden @ w["decoder.lstm.hidden.weight"] + w["decoder.lstm.bias"]
    i = gates[:, 0:d].sigmoid()
    f = gates[:, d : 2 * d].sigmoid()
    g = gates[:, 2 * d : 3 * d].tanh()
    o = gates[:, 3 * d : 4 * d].sigmoid()
    cell = f * state.cell + i * g
    return DecoderState(hidden=o * cell.tanh(), cell=cell)


def decode_step(
    w: BoundParameters,
    enc: Encoding,
    state: DecoderState,
    current: np.ndarray,
    tau: np.ndarray,
    mask: np.ndarray,
    config: ModelConfig,
    training: bool = False,
    rng: Optional[np.random.Generator] = None,
) -> tuple[Tensor, DecoderState]:
    """One decision for a batch.

    `current` holds each episode's acting-vehicle node, `tau` the normalized travel
    times from it, `mask` the legal targets. Returns log-probabilities (B, n).
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any(axis=-1).all():
        raise ContractViolationError("decode step with an empty mask")
    B = mask.shape[0]
    x = enc.nodes[np.arange(B), np.asarray(current)]
    state = lstm_cell(x, state, w)
    out = state.hidden
    if training and config.dropout > 0:
        if rng is None:
            raise ContractViolationError("training-mode dropout needs a generator")
        keep = (rng.random(out.shape) >= config.dropout) / (1.0 - config.dropout)
        out = out * keep
    context = (enc.graph @ w["decoder.attn.graph.weight"] + out @ w["decoder.attn.hidden.weight"]).reshape(B, 1, -1)
    features = context + Tensor(np.asarray(tau)[..., None]) @ w["decoder.attn.time.weight"]
    if config.candidate_term:
        features = features + enc.nodes @ w["decoder.attn.node.weight"]
    scores = (features.tanh() @ w["decoder.attn.v"]).reshape(B, -1)
    return masked_log_softmax(scores, mask), state


# Critic
def critic_value(w: BoundParameters, coords: np.ndarray, config: ModelConfig) -> Tensor:
    """Baseline estimate of the normalized episode cost, one value per instance."""
    _check_input(coords, config)
    d = config.hidden_dim
    e0 = Tensor(coords) @ w["critic.init.weight"] + w["critic.init.bias"]
    q = e0 @ w["critic.attn.q.weight"]
    k = e0 @ w["critic.attn.k.weight"]
    v = e0 @ w["critic.attn.v.weight"]
    e1 = e0 + softmax((q @ k.transpose(0, 2, 1)) * (1.0 / np.sqrt(d)), axis=-1) @ v
    pooled = e1.mean(axis=1)
    hidden = (pooled @ w["critic.head.0.weight"] + w["critic.head.0.bias"]).relu()
    return (hidden @ w["critic.head.1.weight"] + w["critic.head.1.bias"]).reshape(-1)


class HybridModel:
    """Convenience wrapper binding one parameter set to single-instance calls."""

    def __init__(self, params: PolicyParameters):
        self.params = params
        self.config = params.config

    def encode(self, inst: Instance, training: bool = False) -> Encoding:
        return encode(self.params.bind(requires_grad=False), batch_coordinates([inst]), self.config, training)

    def critic_value(self, inst: Instance) -> float:
        w = self.params.bind(requires_grad=False)
        return float(critic_value(w, batch_coordinates([inst]), self.config).data[0])
