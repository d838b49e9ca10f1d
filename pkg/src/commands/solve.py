import logging
import time
from pathlib import Path

import click

from bench.methods import parse_method
from commands.common import MODES, guarded, load_policy
from config import settings
from env.plan import load_plan, save_plan, verify_plan
from instances.storage import load_instance

logger = logging.getLogger(__name__)


@click.command("solve")
@click.option("--method", required=True, help="exact, ep, ep-all, dps, hm-greedy or hm-sample (dps10 / hm-sample100 also work).")
@click.option("--instance", "instance_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--g", type=int, help="Group size for dps.")
@click.option("--s", "samples", type=int, help="Sample count for hm-sample.")
@click.option("--checkpoint", type=click.Path(dir_okay=False), help="Policy file for the hm methods.")
@click.option("--mode", type=click.Choice(MODES), default="no-revisit", show_default=True)
@click.option("--rng-seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--budget", type=click.IntRange(min=0), help="Improvement step budget for ep-all and dps.")
@click.option("--jobs", type=click.IntRange(min=1), default=settings.default_jobs, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Plan file; defaults next to the instance.")
@guarded
def solve(method, instance_path, g, samples, checkpoint, mode, rng_seed, budget, jobs, out):
    """Solve one instance and write a replay-checked plan."""
    inst = load_instance(instance_path)
    spec = parse_method(
        method,
        g=g,
        samples=samples,
        params=load_policy(checkpoint),
        budget=budget,
        jobs=jobs,
        rng_seed=rng_seed,
        mode=mode,
    )
    start = time.perf_counter()
    plan = spec.run(inst)
    seconds = time.perf_counter() - start

    out_path = Path(out) if out else Path(instance_path).with_suffix(f".{spec.name}.plan")
    save_plan(plan, out_path)
    verify_plan(inst, load_plan(out_path), settings.tolerance)
    logger.info(f"{spec.name}: makespan {plan.makespan:.4f} in {seconds:.2f}s, plan at {out_path}")
    click.echo(f"{spec.name}\tmakespan {plan.makespan:.6f}\ttime {seconds:.3f}s\t{out_path}")
