import io
import logging
from pathlib import Path
from typing import Literal

import pandas as pd
from rich.console import Console
from rich.table import Table

from errors import InvalidArgumentError
from schemas.models import EvalReport, MethodSummary

logger = logging.getLogger(__name__)

REPORT_NAME = "report.md"
SUMMARY_COLUMNS = list(MethodSummary.model_fields)
# (markdown header, console header, field); Std trails Time
DISPLAY_COLUMNS = [
    ("Cost", "Cost", "cost_mean"),
    ("Gap (%)", "Gap (%)", "gap_ratio_of_means"),
    ("Gap per instance (%)", "Gap/inst (%)", "gap_mean_of_ratios"),
    ("Time (s)", "Time (s)", "seconds_mean"),
    ("Std", "Std", "cost_std"),
]


def _display_values(row: MethodSummary) -> list[str]:
    return [f"{getattr(row, field):.2f}" for _, _, field in DISPLAY_COLUMNS]


def _summary_frame(report: EvalReport) -> pd.DataFrame:
    return pd.DataFrame([row.model_dump() for row in report.rows], columns=SUMMARY_COLUMNS)


def _descriptor(report: EvalReport) -> str:
    seed = "-" if report.seed is None else report.seed
    return f"set {report.set_name} n {report.n} count {report.count} seed {seed} generator {report.generator}"


def render_report(report: EvalReport, fmt: Literal["tsv", "markdown"] = "markdown") -> str:
    if fmt == "tsv":
        buffer = io.StringIO()
        buffer.write(f"# {_descriptor(report)}\n")
        # default float formatting is repr, so values parse back exactly
        _summary_frame(report).to_csv(buffer, sep="\t", index=False, lineterminator="\n")
        return buffer.getvalue()
    if fmt != "markdown":
        raise InvalidArgumentError(f"unknown report format {fmt!r}")

    lines = [
        f"## {report.set_name}",
        "",
        _descriptor(report),
        "",
        "| " + " | ".join(["Method", *(header for header, _, _ in DISPLAY_COLUMNS)]) + " |",
        "|---|" + "---:|" * len(DISPLAY_COLUMNS),
    ]
    for row in report.rows:
        lines.append("| " + " | ".join([row.method, *_display_values(row)]) + " |")
    return "\n".join(lines) + "\n"


def parse_summary(text: str) -> list[MethodSummary]:
    """Reads the rows back from `render_report(..., "tsv")`."""
    frame = pd.read_csv(io.StringIO(text), sep="\t", comment="#", dtype={"method": str})
    return [MethodSummary(**record) for record in frame.to_dict(orient="records")]


def write_report(report: EvalReport, out_dir: str | Path) -> list[Path]:
    """Writes `<set>.<method>.tsv` per method, `<set>.summary.tsv` and `report.md`."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = pd.DataFrame([r.model_dump() for r in report.results], columns=["instance", "method", "cost", "seconds"])
    written = []
    for row in report.rows:
        path = out_dir / f"{report.set_name}.{row.method}.tsv"
        per_method = results[results["method"] == row.method][["instance", "cost", "seconds"]]
        per_method.to_csv(path, sep="\t", index=False, lineterminator="\n")
        written.append(path)
    summary = out_dir / f"{report.set_name}.summary.tsv"
    summary.write_text(render_report(report, "tsv"), encoding="utf-8")
    markdown = out_dir / REPORT_NAME
    markdown.write_text(render_report(report, "markdown"), encoding="utf-8")
    written.extend([summary, markdown])
    logger.info(f"Wrote {len(written)} report files to {out_dir}")
    return written


def print_report(report: EvalReport, console: Console | None = None) -> None:
    table = Table(title=f"{report.set_name} (n={report.n}, {report.count} instances)")
    table.add_column("Method")
    for _, header, _ in DISPLAY_COLUMNS:
        table.add_column(header, justify="right")
    for row in report.rows:
        table.add_row(row.method, *_display_values(row))
    (console or Console()).print(table)
