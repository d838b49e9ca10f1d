import numpy as np
import pytest
from rich.console import Console

from bench.methods import MethodSpec, parse_method
from bench.metrics import gap, sample_std, summarize
from bench.report import REPORT_NAME, parse_summary, print_report, render_report, write_report
from bench.suite import evaluate_suite, run_one
from errors import ConfigurationError, InvalidArgumentError, ReplayMismatchError
from instances.generators import uniform_set
from neural.parameters import PolicyParameters
from schemas.models import Instance, InstanceResult


@pytest.fixture
def small_set():
    return [(f"{i:03d}", inst) for i, inst in enumerate(uniform_set(6, 3, 2.0, seed=5))]


def hand_results():
    costs = {("i1", "a"): 10.0, ("i2", "a"): 24.0, ("i1", "b"): 11.0, ("i2", "b"): 20.0}
    return [InstanceResult(instance=i, method=m, cost=c, seconds=0.5) for (i, m), c in costs.items()]


# Metrics
@pytest.mark.parametrize(
    "mean, best, expected",
    [(294.88, 281.53, 4.742), (228.38, 226.33, 0.906), (17.0, 17.0, 0.0)],
)
def test_gap_values(mean, best, expected):
    assert gap(mean, best) == pytest.approx(expected, abs=1e-3)


def test_gap_needs_a_positive_base():
    with pytest.raises(InvalidArgumentError):
        gap(1.0, 0.0)
    assert gap(0.0, 0.0) == 0.0


def test_suite_handles_coincident_nodes(small_set):
    stacked = Instance.from_points([(1.0, 1.0)] * 3, alpha=2.0)
    cases = [*small_set, ("003", stacked)]
    report = evaluate_suite(cases, [parse_method("exact"), parse_method("ep")], progress=False)
    by_instance = {(r.instance, r.method): r.cost for r in report.results}
    assert by_instance[("003", "exact")] == 0.0 and by_instance[("003", "ep")] == 0.0
    exact = report.rows[0]
    assert exact.gap_ratio_of_means == pytest.approx(0.0)
    assert exact.gap_mean_of_ratios == pytest.approx(0.0)
    assert all(np.isfinite(row.gap_mean_of_ratios) for row in report.rows)


def test_sample_std():
    assert sample_std([4.0]) == 0.0
    assert sample_std([1.0, 3.0]) == pytest.approx(np.sqrt(2.0))


def test_summarize_two_instances():
    a, b = summarize(hand_results(), ["a", "b"])
    assert a.method == "a" and a.count == 2
    assert a.cost_mean == pytest.approx(17.0)
    assert a.cost_std == pytest.approx(np.sqrt(98.0))
    assert a.gap_ratio_of_means == pytest.approx(1.5 / 15.5 * 100)
    assert a.gap_mean_of_ratios == pytest.approx(10.0)
    assert b.gap_ratio_of_means == pytest.approx(0.0)
    assert b.gap_mean_of_ratios == pytest.approx(5.0)
    assert b.seconds_mean == pytest.approx(0.5)


# Methods
def test_parse_method_names():
    assert parse_method("dps10").name == "dps10"
    assert parse_method("dps", g=10) == parse_method("dps10")
    assert parse_method("ep-all").kind == "ep-all"
    assert parse_method(" exact ").name == "exact"


@pytest.mark.parametrize("name, kwargs", [
    ("ep5", {}),
    ("dps", {}),
    ("dps1", {}),
    ("hm-sample", {}),
    ("greedy", {}),
    ("ep", {"mode": "revisit"}),
])
def test_parse_method_rejects(name, kwargs):
    with pytest.raises(InvalidArgumentError):
        parse_method(name, **kwargs)


def test_policy_methods_need_a_checkpoint(tiny_config, rng):
    with pytest.raises(ConfigurationError):
        parse_method("hm-greedy")
    params = PolicyParameters.initialize(tiny_config, rng)
    spec = parse_method("hm-sample", samples=8, params=params, mode="revisit")
    assert spec.name == "hm-sample8" and spec.mode == "revisit"


def test_sampling_method_is_keyed_per_instance(tiny_config, rng, small_set):
    spec = parse_method("hm-sample4", params=PolicyParameters.initialize(tiny_config, rng), rng_seed=9)
    _, inst = small_set[0]
    assert spec.run(inst, key=1).actions == spec.run(inst, key=1).actions


def test_dps_group_is_capped_by_the_instance_size(small_set):
    _, inst = small_set[0]
    assert parse_method("dps50").run(inst).makespan == pytest.approx(parse_method("ep-all").run(inst).makespan)


# Suite
def test_evaluate_suite_rows(small_set):
    report = evaluate_suite(small_set, [parse_method("ep"), parse_method("ep-all")], set_name="s", progress=False)
    assert [row.method for row in report.rows] == ["ep", "ep-all"]
    assert len(report.results) == 6
    assert report.n == 6 and report.count == 3
    gaps = [row.gap_ratio_of_means for row in report.rows]
    assert min(gaps) == pytest.approx(0.0)
    assert all(g >= 0 for g in gaps)
    assert report.rows[1].cost_mean <= report.rows[0].cost_mean + 1e-9


def test_method_order_does_not_change_the_numbers(small_set):
    forward = evaluate_suite(small_set, [parse_method("ep"), parse_method("dps3")], timed=False, progress=False)
    backward = evaluate_suite(small_set, [parse_method("dps3"), parse_method("ep")], timed=False, progress=False)
    by_name = {row.method: row for row in backward.rows}
    for row in forward.rows:
        other = by_name[row.method]
        assert row.cost_mean == other.cost_mean
        assert row.gap_ratio_of_means == pytest.approx(other.gap_ratio_of_means)
        assert row.gap_mean_of_ratios == pytest.approx(other.gap_mean_of_ratios)


def test_suite_argument_checks(small_set):
    with pytest.raises(InvalidArgumentError):
        evaluate_suite([], [parse_method("ep")], progress=False)
    with pytest.raises(InvalidArgumentError):
        evaluate_suite(small_set, [], progress=False)
    with pytest.raises(InvalidArgumentError):
        evaluate_suite(small_set, [parse_method("ep"), parse_method("ep")], progress=False)


class Overclaiming(MethodSpec):
    def run(self, inst, key=0):
        plan = super().run(inst, key)
        return plan.model_copy(update={"makespan": plan.makespan * 0.9})


def test_replay_catches_a_wrong_claimed_cost(small_set):
    liar = Overclaiming(name="liar", kind="ep")
    with pytest.raises(ReplayMismatchError) as err:
        run_one(liar, "001", small_set[1][1], 1)
    assert err.value.method == "liar"
    assert err.value.instance == "001"


# Reports
def test_tsv_summary_reads_back(small_set):
    report = evaluate_suite(small_set, [parse_method("ep"), parse_method("ep-all")], set_name="s", seed=5, progress=False)
    text = render_report(report, "tsv")
    assert text.startswith("# set s n 6 count 3 seed 5 generator file\n")
    rows = parse_summary(text)
    assert [r.method for r in rows] == ["ep", "ep-all"]
    for got, want in zip(rows, report.rows):
        assert got.count == want.count
        assert got.cost_mean == pytest.approx(want.cost_mean, rel=1e-12)
        assert got.gap_mean_of_ratios == pytest.approx(want.gap_mean_of_ratios, rel=1e-12, abs=1e-12)


def test_markdown_and_written_files(tmp_path, small_set):
    report = evaluate_suite(small_set, [parse_method("ep"), parse_method("dps3")], set_name="s", progress=False)
    markdown = render_report(report, "markdown")
    header = next(line for line in markdown.splitlines() if line.startswith("| Method"))
    assert header == "| Method | Cost | Gap (%) | Gap per instance (%) | Time (s) | Std |"
    table = [line for line in markdown.splitlines() if line.startswith("| ") and not line.startswith("| Method")]
    assert len(table) == 2
    cells = [cell.strip() for cell in table[0].strip("|").split("|")]
    first = report.rows[0]
    assert cells == [
        first.method,
        f"{first.cost_mean:.2f}",
        f"{first.gap_ratio_of_means:.2f}",
        f"{first.gap_mean_of_ratios:.2f}",
        f"{first.seconds_mean:.2f}",
        f"{first.cost_std:.2f}",
    ]
    with pytest.raises(InvalidArgumentError):
        render_report(report, "html")

    written = write_report(report, tmp_path)
    assert {p.name for p in written} == {"s.ep.tsv", "s.dps3.tsv", "s.summary.tsv", REPORT_NAME}
    per_method = (tmp_path / "s.ep.tsv").read_text().splitlines()
    assert per_method[0] == "instance\tcost\tseconds"
    assert len(per_method) == 4


def test_console_table_uses_the_report_columns(small_set):
    report = evaluate_suite(small_set, [parse_method("ep")], set_name="s", progress=False)
    console = Console(record=True, width=160)
    print_report(report, console)
    header = next(line for line in console.export_text().splitlines() if "Method" in line)
    positions = [header.index(name) for name in ("Cost", "Gap (%)", "Gap/inst (%)", "Time (s)", "Std")]
    assert positions == sorted(positions)
