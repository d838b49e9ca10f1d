import functools
import logging
import traceback
from pathlib import Path

import click

from errors import TrainingDivergenceError, TspdError
from neural.checkpoint import load_checkpoint
from neural.parameters import PolicyParameters

logger = logging.getLogger(__name__)

MODES = ["no-revisit", "revisit"]


def guarded(command):
    """Turns engine errors into click failures (exit status 1)."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except click.ClickException:
            raise
        except TspdError as e:
            if isinstance(e, TrainingDivergenceError):
                logger.error(f"Training diverged: {e.diagnostics}")
            logger.debug(f"Full traceback:\n{traceback.format_exc()}")
            raise click.ClickException(str(e))
        except Exception as e:
            logger.error(f"Unexpected error in {command.__name__}: {str(e)}")
            logger.error(f"Full traceback:\n{traceback.format_exc()}")
            raise click.ClickException(str(e))

    return wrapper


def show_progress(ctx: click.Context) -> bool:
    return not (ctx.obj or {}).get("quiet", False)


def load_policy(path: str | Path | None) -> PolicyParameters | None:
    if path is None:
        return None
    params, header = load_checkpoint(path)
    logger.info(f"Loaded policy from {path} (epoch {header.get('epoch')}, {params.size} parameters)")
    return params
