from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

from models.syntax import Span


def branch_key(method_id: str, span: Span) -> str:
    """Identity of one atomic guard operand, shared by traces, CFGs and coverage."""
    return f"{method_id}@{span.line}:{span.column}"


class EventKind(str, Enum):
    STATEMENT = "statement"
    BRANCH = "branch"
    ENTER = "enter"
    EXCEPTION = "exception"


class TraceOutcome(str, Enum):
    COMPLETED = "completed"
    UNCAUGHT = "uncaught-exception"


class TraceEvent(BaseModel):
    kind: EventKind
    method: str = ""
    frame: int = 0
    span: Optional[Span] = None
    branch: Optional[str] = None
    outcome: Optional[bool] = None
    exception_kind: Optional[str] = None
    message: Optional[str] = None

    def describe(self) -> str:
        where = f" at {self.span}" if self.span is not None else ""
        if self.kind == EventKind.BRANCH:
            return f"branch {self.branch} -> {str(self.outcome).lower()}"
        if self.kind == EventKind.ENTER:
            return f"enter {self.method}"
        if self.kind == EventKind.EXCEPTION:
            return f"exception {self.exception_kind}{where}: {self.message}"
        return f"statement in {self.method}{where}"


class ExecutionTrace(BaseModel):
    events: List[TraceEvent] = Field(default_factory=list)
    entry: str
    focal: Optional[str] = None
    focal_reached: bool = False
    outcome: TraceOutcome = TraceOutcome.COMPLETED

    @property
    def exception(self) -> Optional[TraceEvent]:
        for event in self.events:
            if event.kind == EventKind.EXCEPTION:
                return event
        return None

    def focal_frame(self) -> Optional[int]:
        for event in self.events:
            if event.kind == EventKind.ENTER and event.method == self.focal:
                return event.frame
        return None

    def focal_branch_events(self) -> List[Tuple[str, bool]]:
        """Branch outcomes recorded in the first frame of the focal method."""
        frame = self.focal_frame()
        if frame is None:
            return []
        return [
            (e.branch, e.outcome) for e in self.events
            if e.kind == EventKind.BRANCH and e.frame == frame
        ]

    def excerpt_before_exception(self, count: int = 5) -> List[TraceEvent]:
        for index, event in enumerate(self.events):
            if event.kind == EventKind.EXCEPTION:
                return self.events[max(0, index - count): index + 1]
        return []


def focal_reached(events: List[TraceEvent], focal: Optional[str]) -> bool:
    for event in events:
        if event.kind == EventKind.EXCEPTION:
            return False
        if event.kind == EventKind.ENTER and event.method == focal:
            return True
    return False


class MethodCoverage(BaseModel):
    method: str
    covered_branch_outcomes: List[str] = Field(default_factory=list)
    total_branch_outcomes: int = 0
    covered_lines: List[int] = Field(default_factory=list)
    total_lines: int = 0

    @property
    def branch_pct(self) -> float:
        return percentage(len(self.covered_branch_outcomes), self.total_branch_outcomes)

    @property
    def line_pct(self) -> float:
        return percentage(len(self.covered_lines), self.total_lines)


class CoverageReport(BaseModel):
    methods: Dict[str, MethodCoverage] = Field(default_factory=dict)
    covered_branches: int = 0
    total_branches: int = 0
    covered_lines: int = 0
    total_lines: int = 0
    branch_pct: float = 100.0
    line_pct: float = 100.0


def percentage(covered: int, total: int) -> float:
    if total == 0:
        return 100.0
    return round(100.0 * covered / total, 2)
