import logging

import click

from commands.common import MODES, guarded, show_progress
from config import settings
from schemas.models import Algorithm, ModelConfig, TrainConfig
from training.trainer import Trainer

logger = logging.getLogger(__name__)


@click.command("train")
@click.option("--n", "n", type=int, default=11, show_default=True)
@click.option("--alpha", type=float, default=2.0, show_default=True)
@click.option("--algo", type=click.Choice([a.value for a in Algorithm]), default="dfpg", show_default=True)
@click.option("--workers", type=int, default=1, show_default=True)
@click.option("--epochs", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--resume", is_flag=True, help="Continue from the worker checkpoints in OUT.")
@click.option("--optimizer", type=click.Choice(["sgd", "adam"]), default="sgd", show_default=True)
@click.option("--clip-norm", type=float, default=1.0, show_default=True, help="0 disables clipping.")
@click.option("--checkpoint-every", type=int, default=10, show_default=True)
@click.option("--batch-size", type=int, default=128, show_default=True)
@click.option("--lr", "learning_rate", type=float, default=1e-4, show_default=True)
@click.option("--mode", type=click.Choice(MODES), default="no-revisit", show_default=True)
@click.option("--kde-from", type=click.Path(exists=True, dir_okay=False))
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--hidden-dim", type=int, default=128, show_default=True)
@click.option("--layers", type=int, default=3, show_default=True)
@click.option("--heads", type=int, default=8, show_default=True)
@click.option("--literal-decoder", is_flag=True, help="Drop the candidate term from decoder attention.")
@click.pass_context
@guarded
def train(ctx, n, alpha, algo, workers, epochs, seed, out, resume, optimizer, clip_norm, checkpoint_every,
          batch_size, learning_rate, mode, kde_from, jobs, hidden_dim, layers, heads, literal_decoder):
    """Train a policy and write checkpoints plus a tab-separated epoch log to OUT."""
    config = TrainConfig(
        n=n,
        alpha=alpha,
        algorithm=Algorithm(algo),
        workers=workers,
        epochs=epochs,
        seed=seed,
        optimizer=optimizer,
        clip_norm=clip_norm or None,
        checkpoint_every=checkpoint_every,
        batch_size=batch_size,
        learning_rate=learning_rate,
        mode=mode,
        kde_points=kde_from,
        validation_size=settings.validation_size,
        jobs=jobs,
        model=ModelConfig(hidden_dim=hidden_dim, layers=layers, heads=heads, candidate_term=not literal_decoder),
    )
    trainer = Trainer(config, out, progress=show_progress(ctx))
    if resume:
        trainer.resume()
    policy = trainer.run()
    click.echo(f"policy written to {policy}")
