"""Multi-worker policy-gradient training.

Each epoch every worker draws a fresh batch from its own stream, rolls it out and
takes one update step; then every worker is scored by greedy decoding on a shared
validation set. With follow-the-best scheduling, the lowest-cost worker's
parameters are copied to all workers before the next epoch.
"""

import logging
import time
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from env.mdp import Mode
from errors import ConfigurationError
from instances.density import fit_density, load_points, sample_density
from instances.generators import generate_uniform
from neural.checkpoint import load_checkpoint, save_checkpoint
from neural.parameters import PolicyParameters
from schemas.models import Algorithm, DensityModel, Instance, TrainConfig
from training.decoding import greedy_costs
from training.optim import make_optimizer
from training.updates import reinforce_update

logger = logging.getLogger(__name__)

VALIDATION_STREAM = 0x5EED_7A11
INIT_STREAM = 0x5EED_1417
LOG_NAME = "train_log.tsv"
POLICY_NAME = "policy.bin"


def worker_checkpoint_name(worker_id: int) -> str:
    return f"worker_{worker_id}.bin"


def epoch_rng(seed: int, worker_id: int, epoch: int) -> np.random.Generator:
    return np.random.default_rng([seed ^ worker_id, epoch])


def generate_batch(
    config: TrainConfig, rng: np.random.Generator, count: int, density: Optional[DensityModel] = None
) -> list[Instance]:
    if density is not None:
        return [sample_density(density, config.n, rng, alpha=config.alpha) for _ in range(count)]
    return [generate_uniform(config.n, config.alpha, rng) for _ in range(count)]


def validation_set(config: TrainConfig, density: Optional[DensityModel] = None) -> list[Instance]:
    if config.validation_size < 1:
        raise ConfigurationError("the validation set must not be empty")
    rng = np.random.default_rng([VALIDATION_STREAM, config.seed])
    return generate_batch(config, rng, config.validation_size, density)


def evaluate(params: PolicyParameters, validation: list[Instance], mode: Mode | str = Mode.NO_REVISIT) -> float:
    """Greedy mean cost on the validation instances."""
    if not validation:
        raise ConfigurationError("the validation set must not be empty")
    return float(greedy_costs(validation, params, mode).mean())


@dataclass
class WorkerState:
    worker_id: int
    params: PolicyParameters
    optimizer: object
    last_cost: float = float("inf")
    last_batch_cost: float = float("nan")


@dataclass
class EpochResult:
    epoch: int
    validation_costs: list[float]
    best_worker: int
    mean_batch_cost: float
    seconds: float = 0.0


def _worker_epoch(
    worker_id: int,
    epoch: int,
    flat: np.ndarray,
    optimizer_state: dict,
    config: TrainConfig,
    validation: list[Instance],
    density: Optional[DensityModel],
) -> tuple[int, np.ndarray, dict, float, float]:
    """One worker's batch, update and evaluation; runs in-process or in a pool."""
    params = PolicyParameters.from_flat(config.model, flat)
    optimizer = make_optimizer(config.optimizer, config.learning_rate)
    optimizer.load_state_dict(optimizer_state)
    rng = epoch_rng(config.seed, worker_id, epoch)
    batch = generate_batch(config, rng, config.batch_size, density)
    update = reinforce_update(params, optimizer, batch, rng, clip_norm=config.clip_norm, mode=config.mode)
    cost = evaluate(params, validation, config.mode)
    return worker_id, params.to_flat(), optimizer.state_dict(), update.mean_cost, cost


def run_epoch(
    workers: list[WorkerState],
    validation: list[Instance],
    epoch: int,
    config: TrainConfig,
    broadcast: bool,
    density: Optional[DensityModel] = None,
    pool: Optional[Executor] = None,
) -> EpochResult:
    if not validation:
        raise ConfigurationError("the validation set must not be empty")
    jobs = [
        (w.worker_id, epoch, w.params.to_flat(), w.optimizer.state_dict(), config, validation, density)
        for w in workers
    ]
    if pool is not None and len(workers) > 1:
        outcomes = list(pool.map(_worker_epoch, *zip(*jobs)))
    else:
        outcomes = [_worker_epoch(*job) for job in jobs]

    for worker, (worker_id, flat, state, batch_cost, cost) in zip(workers, outcomes):
        worker.params.load_flat(flat)
        worker.optimizer.load_state_dict(state)
        worker.last_batch_cost = batch_cost
        worker.last_cost = cost

    costs = [w.last_cost for w in workers]
    best = int(np.argmin(costs))
    if broadcast:
        flat = workers[best].params.to_flat()
        state = workers[best].optimizer.state_dict()
        for worker in workers:
            if worker.worker_id != workers[best].worker_id:
                worker.params.load_flat(flat)
                worker.optimizer.load_state_dict(state)
    return EpochResult(
        epoch=epoch,
        validation_costs=costs,
        best_worker=best,
        mean_batch_cost=float(np.mean([w.last_batch_cost for w in workers])),
    )


def _shape(model) -> tuple:
    return (model.hidden_dim, model.layers, model.heads, model.ff_width, model.candidate_term)


def init_workers(config: TrainConfig) -> list[WorkerState]:
    base = PolicyParameters.initialize(config.model, np.random.default_rng([INIT_STREAM, config.seed]))
    return [
        WorkerState(worker_id=k, params=base.copy(), optimizer=make_optimizer(config.optimizer, config.learning_rate))
        for k in range(config.workers)
    ]


class Trainer:
    def __init__(self, config: TrainConfig, out_dir: str | Path, progress: bool = True):
        if config.algorithm is Algorithm.REINFORCE and config.workers != 1:
            raise ConfigurationError("reinforce trains a single worker; use a2c or dfpg for several")
        self.config = config
        self.out_dir = Path(out_dir)
        self.progress = progress
        self.density = fit_density(load_points(config.kde_points)) if config.kde_points else None
        self.validation = validation_set(config, self.density)
        self.workers = init_workers(config)
        self.start_epoch = 0

    @property
    def log_path(self) -> Path:
        return self.out_dir / LOG_NAME

    @property
    def broadcast(self) -> bool:
        return self.config.algorithm is Algorithm.DFPG

    def resume(self) -> int:
        """Reloads worker checkpoints and trims the log to the saved epoch."""
        epochs = set()
        for worker in self.workers:
            path = self.out_dir / worker_checkpoint_name(worker.worker_id)
            params, header = load_checkpoint(path)
            if _shape(params.config) != _shape(self.config.model):
                raise ConfigurationError(f"{path}: model shape differs from the requested configuration")
            worker.params = PolicyParameters.from_flat(self.config.model, params.to_flat())
            epochs.add(int(header["epoch"]))
        if len(epochs) != 1:
            raise ConfigurationError(f"worker checkpoints disagree on the epoch: {sorted(epochs)}")
        self.start_epoch = epochs.pop()
        if self.log_path.exists():
            log = pd.read_csv(self.log_path, sep="\t")
            log[log["epoch"] <= self.start_epoch].to_csv(self.log_path, sep="\t", index=False)
        logger.info(f"Resuming from epoch {self.start_epoch}")
        return self.start_epoch

    def _log(self, result: EpochResult) -> None:
        row = {"epoch": result.epoch}
        row.update({f"val_{k}": cost for k, cost in enumerate(result.validation_costs)})
        row.update(
            best_worker=result.best_worker,
            mean_batch_cost=result.mean_batch_cost,
            seconds=round(result.seconds, 3),
        )
        header = not self.log_path.exists()
        pd.DataFrame([row]).to_csv(self.log_path, sep="\t", mode="a", header=header, index=False)

    def _checkpoint(self, epoch: int, best: int) -> Path:
        extra = {
            "seed": self.config.seed,
            "algorithm": self.config.algorithm.value,
            "n": self.config.n,
            "alpha": self.config.alpha,
            "mode": self.config.mode,
        }
        for worker in self.workers:
            save_checkpoint(worker.params, self.out_dir / worker_checkpoint_name(worker.worker_id), epoch, extra)
        return save_checkpoint(self.workers[best].params, self.out_dir / POLICY_NAME, epoch, extra)

    def run(self) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        config = self.config
        logger.info(
            f"Training {config.algorithm.value} with {config.workers} worker(s) on n={config.n}, "
            f"{config.epochs} epochs of {config.batch_size} episodes"
        )
        best = 0
        pool = ProcessPoolExecutor(max_workers=config.jobs) if config.jobs > 1 and config.workers > 1 else None
        try:
            epochs = range(self.start_epoch + 1, config.epochs + 1)
            for epoch in tqdm(epochs, desc="train", unit="epoch", disable=None if self.progress else True):
                start = time.perf_counter()
                result = run_epoch(self.workers, self.validation, epoch, config, self.broadcast, self.density, pool)
                result.seconds = time.perf_counter() - start
                best = result.best_worker
                self._log(result)
                logger.info(
                    f"Epoch {epoch}: best worker {best} validation {result.validation_costs[best]:.4f}, "
                    f"batch mean {result.mean_batch_cost:.4f} ({result.seconds:.1f}s)"
                )
                if epoch % config.checkpoint_every == 0:
                    self._checkpoint(epoch, best)
        finally:
            if pool is not None:
                pool.shutdown()
        if self.start_epoch >= config.epochs:
            best = int(np.argmin([evaluate(w.params, self.validation, config.mode) for w in self.workers]))
        return self._checkpoint(max(config.epochs, self.start_epoch), best)
