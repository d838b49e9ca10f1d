import logging

from dotenv import load_dotenv
from pydantic_settings import BaseSettings, SettingsConfigDict
from rich.logging import RichHandler

load_dotenv()


class Settings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="TSPD_", env_file=".env", extra="ignore")

    log_level: str = "INFO"

    # Solver guards
    exact_max_nodes: int = 12
    search_max_nodes: int = 5
    exact_chunk_size: int = 20000

    # Makespans are compared with this absolute tolerance everywhere
    tolerance: float = 1e-9

    # Revisit-mode truncation
    revisit_step_factor: int = 10
    revisit_penalty: float = 1e4

    ep_all_budget_factor: int = 50
    validation_size: int = 64
    default_jobs: int = 1


settings = Settings()

_configured = False


def configure_logging(level: str | None = None, quiet: bool = False) -> None:
    global _configured
    if _configured:
        return
    level = level or settings.log_level
    if quiet:
        level = "WARNING"
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(rich_tracebacks=False, show_path=False)],
    )
    _configured = True
