import logging
from pathlib import Path

import click

from bench.methods import parse_method
from bench.report import print_report, write_report
from bench.suite import evaluate_suite
from commands.common import MODES, guarded, load_policy, show_progress
from instances.storage import load_instance_set

logger = logging.getLogger(__name__)


@click.command("bench")
@click.option("--set", "set_dir", type=click.Path(file_okay=False), required=True, help="Directory of instance files.")
@click.option("--methods", required=True, help="Comma list, e.g. exact,ep-all,dps10,hm-sample100.")
@click.option("--checkpoint", type=click.Path(dir_okay=False))
@click.option("--out", type=click.Path(file_okay=False), help="Report directory; defaults to SET/report.")
@click.option("--mode", type=click.Choice(MODES), default="no-revisit", show_default=True)
@click.option("--rng-seed", type=click.IntRange(min=0), default=0, show_default=True)
@click.option("--budget", type=click.IntRange(min=0))
@click.option("--jobs", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--no-timing", is_flag=True, help="Allow --jobs to spread instances over processes.")
@click.pass_context
@guarded
def bench(ctx, set_dir, methods, checkpoint, out, mode, rng_seed, budget, jobs, no_timing):
    """Run METHODS on every instance in SET and write the reports."""
    instances = load_instance_set(set_dir)
    params = load_policy(checkpoint)
    specs = []
    for name in [m for m in methods.split(",") if m.strip()]:
        is_policy = name.strip().startswith("hm")
        specs.append(
            parse_method(
                name,
                params=params,
                budget=budget,
                rng_seed=rng_seed,
                mode=mode if is_policy else "no-revisit",
            )
        )
    set_path = Path(set_dir)
    seeds = {inst.seed for _, inst in instances}
    report = evaluate_suite(
        instances,
        specs,
        set_name=set_path.resolve().name,
        timed=not no_timing,
        jobs=jobs,
        progress=show_progress(ctx),
        seed=seeds.pop() if len(seeds) == 1 else None,
    )
    out_dir = Path(out) if out else set_path / "report"
    write_report(report, out_dir)
    if show_progress(ctx):
        print_report(report)
    click.echo(f"report written to {out_dir}")
