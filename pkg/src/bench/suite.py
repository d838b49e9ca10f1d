import logging
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Optional, Sequence

from tqdm import tqdm

from bench.methods import MethodSpec
from bench.metrics import summarize
from config import settings
from env.plan import verify_plan
from errors import InvalidArgumentError, ReplayMismatchError, TspdError
from schemas.models import EvalReport, Instance, InstanceResult

logger = logging.getLogger(__name__)


def run_one(method: MethodSpec, name: str, inst: Instance, key: int) -> InstanceResult:
    """Solves one instance and checks the plan by replay before its cost counts."""
    start = time.perf_counter()
    plan = method.run(inst, key)
    seconds = time.perf_counter() - start
    try:
        replayed = verify_plan(inst, plan, settings.tolerance)
    except TspdError as e:
        raise ReplayMismatchError(f"{method.name} on {name}: {e}", method=method.name, instance=name) from e
    served = sorted(replayed.served_customers())
    if plan.mode == "no-revisit" and served != list(inst.customers):
        raise ReplayMismatchError(
            f"{method.name} on {name}: customers served {served}", method=method.name, instance=name
        )
    return InstanceResult(instance=name, method=method.name, cost=replayed.makespan, seconds=seconds)


def evaluate_suite(
    instances: Sequence[tuple[str, Instance]],
    methods: Sequence[MethodSpec],
    set_name: str = "suite",
    timed: bool = True,
    jobs: int = 1,
    progress: bool = True,
    seed: Optional[int] = None,
    generator: str = "file",
) -> EvalReport:
    """Runs every method on every instance.

    Timed runs are sequential. With `timed=False` and `jobs > 1` the instances
    of each method are spread over a process pool.
    """
    if not instances:
        raise InvalidArgumentError("the instance set is empty")
    if not methods:
        raise InvalidArgumentError("no methods to evaluate")
    names = [m.name for m in methods]
    if len(set(names)) != len(names):
        raise InvalidArgumentError(f"duplicate methods in {names}")
    sizes = {inst.n for _, inst in instances}
    if len(sizes) != 1:
        logger.warning(f"Instance set mixes sizes {sorted(sizes)}")

    logger.info(f"Evaluating {len(methods)} method(s) on {len(instances)} instance(s) of {set_name}")
    results: list[InstanceResult] = []
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 and not timed else None
    try:
        for method in methods:
            jobs_args = [(method, name, inst, key) for key, (name, inst) in enumerate(instances)]
            if pool is not None:
                outcomes = pool.map(run_one, *zip(*jobs_args))
            else:
                outcomes = (run_one(*args) for args in jobs_args)
            for result in tqdm(
                outcomes, total=len(jobs_args), desc=method.name, unit="inst", disable=None if progress else True
            ):
                results.append(result)
            mean = sum(r.cost for r in results if r.method == method.name) / len(instances)
            logger.info(f"{method.name}: mean cost {mean:.4f}")
    finally:
        if pool is not None:
            pool.shutdown()

    return EvalReport(
        set_name=set_name,
        n=instances[0][1].n,
        count=len(instances),
        seed=seed,
        generator=generator,
        rows=summarize(results, names),
        results=results,
    )
