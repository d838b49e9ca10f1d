"""Named solution methods: exact, ep, ep-all, dps<g>, hm-greedy and hm-sample<s>."""

import re
from dataclasses import dataclass
from typing import Optional

import numpy as np

from env.mdp import Mode
from errors import ConfigurationError, InvalidArgumentError
from neural.parameters import PolicyParameters
from schemas.models import Instance, Plan
from solvers.exact import solve_exact
from solvers.heuristics import dps, tsp_ep, tsp_ep_all
from training.decoding import greedy_decode, sample_decode

_PATTERN = re.compile(r"^(exact|ep|ep-all|dps|hm-greedy|hm-sample)(\d+)?$")


@dataclass(frozen=True)
class MethodSpec:
    """A picklable solver call; `key` seeds per-instance sampling."""

    name: str
    kind: str
    g: Optional[int] = None
    samples: Optional[int] = None
    budget: Optional[int] = None
    jobs: int = 1
    rng_seed: int = 0
    mode: str = Mode.NO_REVISIT.value
    params: Optional[PolicyParameters] = None

    def run(self, inst: Instance, key: int = 0) -> Plan:
        if self.kind == "exact":
            return solve_exact(inst, jobs=self.jobs, progress=False)
        if self.kind == "ep":
            return tsp_ep(inst)
        if self.kind == "ep-all":
            return tsp_ep_all(inst, self.budget)
        if self.kind == "dps":
            return dps(inst, min(self.g, inst.n), self.budget)
        if self.kind == "hm-greedy":
            return greedy_decode(inst, self.params, self.mode)
        rng = np.random.default_rng([self.rng_seed, key])
        return sample_decode(inst, self.params, self.samples, rng, self.mode)


def parse_method(
    name: str,
    g: Optional[int] = None,
    samples: Optional[int] = None,
    params: Optional[PolicyParameters] = None,
    budget: Optional[int] = None,
    jobs: int = 1,
    rng_seed: int = 0,
    mode: str = Mode.NO_REVISIT.value,
) -> MethodSpec:
    """`dps10` and `dps --g 10` are the same method, likewise `hm-sample100` and `--s 100`."""
    match = _PATTERN.match(name.strip())
    if match is None:
        raise InvalidArgumentError(f"unknown method {name!r}")
    kind, number = match.group(1), match.group(2)
    if number is not None and kind not in ("dps", "hm-sample"):
        raise InvalidArgumentError(f"method {kind} takes no numeric suffix")
    if kind == "dps":
        g = int(number) if number is not None else g
        if g is None:
            raise InvalidArgumentError("dps needs a group size, e.g. dps10 or --g 10")
        if g < 2:
            raise InvalidArgumentError(f"group size must be >= 2, got {g}")
        name = f"dps{g}"
    elif kind == "hm-sample":
        samples = int(number) if number is not None else samples
        if samples is None or samples < 1:
            raise InvalidArgumentError("hm-sample needs a sample count, e.g. hm-sample100 or --s 100")
        name = f"hm-sample{samples}"
    else:
        name = kind
    if kind.startswith("hm") and params is None:
        raise ConfigurationError(f"method {name} needs a policy checkpoint")
    if kind in ("exact", "ep", "ep-all", "dps") and mode != Mode.NO_REVISIT.value:
        raise InvalidArgumentError(f"method {name} only builds plans without revisits")
    return MethodSpec(
        name=name,
        kind=kind,
        g=g,
        samples=samples,
        budget=budget,
        jobs=jobs,
        rng_seed=rng_seed,
        mode=mode,
        params=params,
    )
