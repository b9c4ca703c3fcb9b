import json
import logging
from enum import Enum
from pathlib import Path
from typing import List, Union

from pydantic import ValidationError

from harness.pipeline import dumps_report
from models.errors import MalformedInputError, NotFoundError, VersionMismatchError
from models.report import REPORT_FORMAT_VERSION, PhaseTiming, RunReport

logger = logging.getLogger(__name__)


class ReportFormat(str, Enum):
    JSON = "json"
    TABLE = "table"


def load_report(run_dir: Union[str, Path]) -> RunReport:
    """Read ``report.json`` (and ``timing.json`` when present) from a run directory."""
    root = Path(run_dir)
    source = root / "report.json"
    if not source.is_file():
        raise NotFoundError(f"no report.json in {run_dir}", detail={"run_dir": str(run_dir)})
    try:
        document = json.loads(source.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"{source} is not JSON: {exc}")
    version = document.get("format_version") if isinstance(document, dict) else None
    if version != REPORT_FORMAT_VERSION:
        raise VersionMismatchError(
            f"report format {version} is not supported (expected {REPORT_FORMAT_VERSION})",
            detail={"found": version, "expected": REPORT_FORMAT_VERSION},
        )
    try:
        report = RunReport.model_validate(document)
        timing = root / "timing.json"
        if timing.is_file():
            report.timing = PhaseTiming.model_validate_json(timing.read_text(encoding="utf-8"))
    except ValidationError as exc:
        raise MalformedInputError(f"{source} does not hold a run report: {exc.errors()[0]['msg']}")
    return report


def _table(header: List[str], rows: List[List[str]]) -> List[str]:
    widths = [max(len(row[i]) for row in [header] + rows) for i in range(len(header))]

    def line(cells: List[str]) -> str:
        return "  ".join(cell.ljust(width) if i == 0 else cell.rjust(width)
                         for i, (cell, width) in enumerate(zip(cells, widths))).rstrip()

    out = [line(header), "  ".join("-" * w for w in widths)]
    out.extend(line(row) for row in rows)
    return out


def render_table(report: RunReport) -> str:
    header = ["focal", "paths", "run", "valid", "invalid", "infeasible", "branch%", "line%"]
    rows = []
    for row in report.focals:
        name = row.focal + (" (truncated)" if row.truncated else "")
        if row.error:
            name += f" [{row.error}]"
        rows.append([
            name, str(row.paths_found), str(row.sessions_run), str(row.valid_tests),
            str(row.invalid_tests), str(row.infeasible), f"{row.branch_pct:.2f}", f"{row.line_pct:.2f}",
        ])
    rows.append([
        "TOTAL", str(sum(r.paths_found for r in report.focals)), str(report.generated), str(report.valid),
        str(sum(r.invalid_tests for r in report.focals)), str(sum(r.infeasible for r in report.focals)),
        f"{report.branch_pct:.2f}", f"{report.line_pct:.2f}",
    ])
    lines = [f"backend: {report.backend}  prompt: {report.prompt_variant}  max rounds: {report.max_rounds}", ""]
    lines.extend(_table(header, rows))
    lines.append("")
    lines.append(f"valid rate: {report.valid_rate:.2%}")
    if report.valid_by_round:
        lines.append("valid by round: " + ", ".join(
            f"{i}:{count}" for i, count in enumerate(report.valid_by_round, start=1)))
    if report.timing is not None:
        t = report.timing
        lines.append(
            f"timing: extract {t.extract:.2f}s, distill {t.distill:.2f}s, "
            f"generate {t.generate:.2f}s, validate {t.validation:.2f}s"
        )
    return "\n".join(lines) + "\n"


def report_render(report: RunReport, fmt: ReportFormat = ReportFormat.JSON) -> str:
    if fmt == ReportFormat.JSON:
        return dumps_report(report)
    return render_table(report)
