import logging
from pathlib import Path

import click
import numpy as np

from commands.common import guarded
from instances.density import fit_density, load_points, sample_density
from instances.generators import check_size, uniform_set
from instances.storage import instance_filename, save_instance

logger = logging.getLogger(__name__)


@click.command("gen")
@click.option("--n", "n", type=int, required=True, help="Nodes per instance, depot included.")
@click.option("--count", type=click.IntRange(min=1), required=True)
@click.option("--alpha", type=float, default=2.0, show_default=True, help="Drone speed relative to the truck.")
@click.option("--seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True)
@click.option("--kde-from", type=click.Path(exists=True, dir_okay=False), help="Sample from a density fitted to these points.")
@guarded
def gen(n: int, count: int, alpha: float, seed: int, out: str, kde_from: str | None):
    """Write COUNT instance files into OUT."""
    check_size(n, alpha)
    if kde_from:
        density = fit_density(load_points(kde_from))
        instances = [sample_density(density, n, np.random.default_rng([seed, i]), alpha, seed) for i in range(count)]
    else:
        instances = uniform_set(n, count, alpha, seed)
    out_dir = Path(out)
    for i, inst in enumerate(instances):
        save_instance(inst, out_dir / instance_filename(i))
    logger.info(f"Generated {count} instances with n={n} in {out_dir}")
    click.echo(f"wrote {count} instances to {out_dir}")
