import logging
from typing import Dict, Iterable, List, Set, Tuple

from models.syntax import Binary, If, MethodDecl, Unary, While
from models.trace import CoverageReport, EventKind, ExecutionTrace, MethodCoverage, branch_key, percentage
from subjectlang.checker import SemanticModel

logger = logging.getLogger(__name__)


def guard_atoms(expr) -> List:
    """Atomic operands of a guard, left to right, after peeling ``&&``, ``||`` and ``!``."""
    if isinstance(expr, Binary) and expr.op in ("&&", "||"):
        return guard_atoms(expr.left) + guard_atoms(expr.right)
    if isinstance(expr, Unary) and expr.op == "!":
        return guard_atoms(expr.operand)
    return [expr]


def _walk(stmts) -> Iterable:
    for stmt in stmts:
        yield stmt
        if isinstance(stmt, If):
            yield from _walk(stmt.then_body)
            if stmt.else_body is not None:
                yield from _walk(stmt.else_body)
        elif isinstance(stmt, While):
            yield from _walk(stmt.body)


def method_universe(method: MethodDecl) -> Tuple[Set[str], Set[int]]:
    """Branch ids and statement lines a method can cover."""
    branches: Set[str] = set()
    lines: Set[int] = set()
    for stmt in _walk(method.body or []):
        lines.add(stmt.span.line)
        if isinstance(stmt, (If, While)):
            for atom in guard_atoms(stmt.cond):
                branches.add(branch_key(method.method_id, atom.span))
    return branches, lines


def outcome_id(branch: str, outcome: bool) -> str:
    return f"{branch}={'true' if outcome else 'false'}"


def measure_coverage(traces: List[ExecutionTrace], model: SemanticModel, scope: Iterable[str]) -> CoverageReport:
    """Union branch-outcome and line coverage of ``traces`` over the methods in ``scope``."""
    universes: Dict[str, Tuple[Set[str], Set[int]]] = {}
    for method_id in sorted(set(scope)):
        method = model.methods.get(method_id)
        universes[method_id] = method_universe(method) if method is not None else (set(), set())

    covered_branches: Dict[str, Set[str]] = {m: set() for m in universes}
    covered_lines: Dict[str, Set[int]] = {m: set() for m in universes}
    for trace in traces:
        for event in trace.events:
            if event.method not in universes:
                continue
            if event.kind == EventKind.BRANCH:
                covered_branches[event.method].add(outcome_id(event.branch, event.outcome))
            elif event.kind == EventKind.STATEMENT and event.span is not None:
                covered_lines[event.method].add(event.span.line)

    report = CoverageReport()
    for method_id, (branches, lines) in universes.items():
        entry = MethodCoverage(
            method=method_id,
            covered_branch_outcomes=sorted(covered_branches[method_id]),
            total_branch_outcomes=2 * len(branches),
            covered_lines=sorted(covered_lines[method_id] & lines),
            total_lines=len(lines),
        )
        report.methods[method_id] = entry
        report.covered_branches += len(entry.covered_branch_outcomes)
        report.total_branches += entry.total_branch_outcomes
        report.covered_lines += len(entry.covered_lines)
        report.total_lines += entry.total_lines
    report.branch_pct = percentage(report.covered_branches, report.total_branches)
    report.line_pct = percentage(report.covered_lines, report.total_lines)
    logger.debug("coverage over %d method(s): branch %.2f%%, line %.2f%%",
                 len(universes), report.branch_pct, report.line_pct)
    return report
