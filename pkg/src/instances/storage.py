import logging
import re
from pathlib import Path
from typing import Optional

from errors import InstanceFormatError, InvalidArgumentError
from schemas.models import Instance

logger = logging.getLogger(__name__)

SUFFIX = ".tspd"
_SEED_COMMENT = re.compile(r"^#\s*seed\s+(-?\d+)\s*$")


def instance_filename(index: int) -> str:
    return f"{index:03d}{SUFFIX}"


def dumps_instance(inst: Instance) -> str:
    lines = []
    if inst.seed is not None:
        lines.append(f"# seed {inst.seed}")
    lines.append(f"{inst.n} {inst.alpha!r}")
    # repr gives the shortest text that parses back to the same double
    lines.extend(f"{x!r} {y!r}" for x, y in inst.coords)
    return "\n".join(lines) + "\n"


def save_instance(inst: Instance, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(dumps_instance(inst))
    return path


def loads_instance(text: str, source: Optional[str] = None) -> Instance:
    seed = None
    header = None
    coords: list[tuple[float, float]] = []
    n = 0
    last_line = 0
    for number, raw in enumerate(text.splitlines(), start=1):
        last_line = number
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            match = _SEED_COMMENT.match(line)
            if match and header is None:
                seed = int(match.group(1))
            continue
        tokens = line.split()
        if header is None:
            if len(tokens) != 2:
                raise InstanceFormatError("header must be 'n alpha'", line=number, path=source)
            try:
                n = int(tokens[0])
                alpha = float(tokens[1])
            except ValueError:
                raise InstanceFormatError(f"malformed header {line!r}", line=number, path=source)
            if n < 2:
                raise InvalidArgumentError(f"n must be >= 2, got {n}")
            if not alpha >= 1:
                raise InvalidArgumentError(f"alpha must be >= 1, got {alpha}")
            header = (n, alpha)
            continue
        if len(coords) == n:
            raise InstanceFormatError(f"more than {n} coordinate lines", line=number, path=source)
        if len(tokens) != 2:
            raise InstanceFormatError(f"expected 'x y', got {len(tokens)} tokens", line=number, path=source)
        try:
            coords.append((float(tokens[0]), float(tokens[1])))
        except ValueError:
            raise InstanceFormatError(f"non-numeric token in {line!r}", line=number, path=source)
    if header is None:
        raise InstanceFormatError("missing 'n alpha' header", line=last_line + 1, path=source)
    if len(coords) != n:
        raise InstanceFormatError(
            f"header announces {n} nodes but {len(coords)} coordinate lines follow",
            line=last_line + 1,
            path=source,
        )
    return Instance(n=n, coords=tuple(coords), alpha=header[1], seed=seed)


def load_instance(path: str | Path) -> Instance:
    path = Path(path)
    return loads_instance(path.read_text(encoding="utf-8"), source=str(path))


def load_instance_set(directory: str | Path) -> list[tuple[str, Instance]]:
    directory = Path(directory)
    if not directory.is_dir():
        raise InvalidArgumentError(f"instance set directory not found: {directory}")
    files = sorted(directory.glob(f"*{SUFFIX}"))
    if not files:
        raise InvalidArgumentError(f"no {SUFFIX} files in {directory}")
    logger.info(f"Loading {len(files)} instances from {directory}")
    return [(path.stem, load_instance(path)) for path in files]
