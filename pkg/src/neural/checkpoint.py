"""Checkpoint files: one JSON header line, a newline, then the flat parameters as little-endian doubles."""

import logging
from pathlib import Path
from typing import Any, Optional

import numpy as np
import orjson

from errors import ConfigurationError
from neural.parameters import PolicyParameters
from schemas.models import ModelConfig

logger = logging.getLogger(__name__)

FORMAT = "tspd-policy"
VERSION = 1
_DTYPE = np.dtype("<f8")


def checkpoint_header(params: PolicyParameters, epoch: int = 0, extra: Optional[dict[str, Any]] = None) -> dict:
    config = params.config
    header = {
        "format": FORMAT,
        "version": VERSION,
        "layers": config.layers,
        "heads": config.heads,
        "hidden_dim": config.hidden_dim,
        "embedding_dim": config.hidden_dim,
        "ff_dim": config.ff_width,
        "dropout": config.dropout,
        "decoder_mode": config.decoder_mode,
        "size": params.size,
        "epoch": epoch,
    }
    if extra:
        header.update(extra)
    return header


def save_checkpoint(params: PolicyParameters, path: str | Path, epoch: int = 0, extra: Optional[dict] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = orjson.dumps(checkpoint_header(params, epoch, extra))
    tmp = path.with_suffix(path.suffix + ".tmp")
    with tmp.open("wb") as handle:
        handle.write(header + b"\n")
        handle.write(params.to_flat().astype(_DTYPE).tobytes())
    tmp.replace(path)
    logger.debug(f"Saved checkpoint {path} at epoch {epoch}")
    return path


def load_checkpoint(path: str | Path) -> tuple[PolicyParameters, dict]:
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"checkpoint not found: {path}")
    raw = path.read_bytes()
    newline = raw.find(b"\n")
    if newline < 0:
        raise ConfigurationError(f"{path}: missing checkpoint header")
    try:
        header = orjson.loads(raw[:newline])
    except orjson.JSONDecodeError:
        raise ConfigurationError(f"{path}: unreadable checkpoint header")
    if header.get("format") != FORMAT or header.get("version") != VERSION:
        raise ConfigurationError(f"{path}: unsupported checkpoint {header.get('format')} v{header.get('version')}")
    config = ModelConfig(
        hidden_dim=header["hidden_dim"],
        layers=header["layers"],
        heads=header["heads"],
        ff_dim=header["ff_dim"],
        dropout=header.get("dropout", 0.1),
        candidate_term=header["decoder_mode"] == "full",
    )
    body = raw[newline + 1 :]
    if len(body) % _DTYPE.itemsize:
        raise ConfigurationError(f"{path}: truncated parameter block")
    flat = np.frombuffer(body, dtype=_DTYPE)
    params = PolicyParameters(config)
    if flat.size != header["size"] or flat.size != params.size:
        raise ConfigurationError(
            f"{path}: header announces {header['size']} values, layout needs {params.size}, file holds {flat.size}"
        )
    params.load_flat(flat.astype(np.float64))
    return params, header
