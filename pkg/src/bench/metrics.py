from typing import Sequence

import numpy as np
import pandas as pd

from errors import InvalidArgumentError
from schemas.models import InstanceResult, MethodSummary


def gap(mean_cost: float, best_mean: float) -> float:
    """Relative gap in percent: (mean - best) / best * 100.

    Zero over zero is a 0% gap; every method scores 0 when all nodes share the depot.
    """
    if best_mean == 0 and mean_cost == 0:
        return 0.0
    if not best_mean > 0:
        raise InvalidArgumentError(f"gap base must be positive, got {best_mean}")
    return (mean_cost - best_mean) / best_mean * 100.0


def sample_std(values: Sequence[float]) -> float:
    values = np.asarray(values, dtype=np.float64)
    if values.size < 2:
        return 0.0
    return float(np.std(values, ddof=1))


def summarize(results: Sequence[InstanceResult], methods: Sequence[str]) -> list[MethodSummary]:
    """Per-method rows in the given method order.

    `gap_ratio_of_means` compares mean costs with the best mean; `gap_mean_of_ratios`
    averages per-instance gaps to the best method on that instance.
    """
    frame = pd.DataFrame([r.model_dump() for r in results])
    costs = frame.pivot(index="instance", columns="method", values="cost")
    seconds = frame.pivot(index="instance", columns="method", values="seconds")
    means = costs.mean(axis=0)
    best_mean = float(means.min())
    per_instance_best = costs.min(axis=1)
    rows = []
    for method in methods:
        column = costs[method]
        ratios = [gap(c, b) for c, b in zip(column, per_instance_best)]
        rows.append(
            MethodSummary(
                method=method,
                count=int(column.count()),
                cost_mean=float(means[method]),
                cost_std=sample_std(column.to_numpy()),
                gap_ratio_of_means=gap(float(means[method]), best_mean),
                gap_mean_of_ratios=float(np.mean(ratios)),
                seconds_mean=float(seconds[method].mean()),
            )
        )
    return rows
