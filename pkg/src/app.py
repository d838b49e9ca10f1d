import click
from dotenv import load_dotenv

from commands.bench import bench
from commands.gen import gen
from commands.solve import solve
from commands.train import train
from config import configure_logging, settings

load_dotenv()


@click.group()
@click.option("--log-level", default=settings.log_level, show_default=True, help="Python logging level.")
@click.option("--quiet", is_flag=True, help="Warnings only, no progress bars.")
@click.pass_context
def cli(ctx: click.Context, log_level: str, quiet: bool):
    """Drone-truck routing: generate instances, solve, train policies and benchmark."""
    ctx.ensure_object(dict)
    ctx.obj["quiet"] = quiet
    configure_logging(log_level, quiet)


cli.add_command(gen)
cli.add_command(solve)
cli.add_command(train)
cli.add_command(bench)


if __name__ == "__main__":
    cli()
