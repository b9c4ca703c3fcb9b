from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from models.session import SessionStatus
from models.trace import CoverageReport

REPORT_FORMAT_VERSION = 1


class SessionRow(BaseModel):
    path: str = Field(..., description="Path id, Owner#m/(..)/p:<n>")
    status: SessionStatus
    rounds: int = 0
    valid_round: Optional[int] = None
    test_file: Optional[str] = None
    last_outcome: Optional[str] = Field(None, description="Validation kind or backend error of the last round")


class FocalRow(BaseModel):
    focal: str
    paths_found: int = 0
    truncated: bool = False
    sessions_run: int = 0
    valid_tests: int = 0
    invalid_tests: int = 0
    infeasible: int = 0
    status_breakdown: Dict[str, int] = Field(default_factory=dict)
    branch_pct: float = 100.0
    line_pct: float = 100.0
    error: Optional[str] = Field(None, description="Code and message when the focal could not be processed")
    sessions: List[SessionRow] = Field(default_factory=list)


class PhaseTiming(BaseModel):
    extract: float = 0.0
    distill: float = 0.0
    generate: float = 0.0
    validation: float = 0.0

    @property
    def total(self) -> float:
        return self.extract + self.distill + self.generate + self.validation


class RunReport(BaseModel):
    format_version: int = REPORT_FORMAT_VERSION
    project: str = ""
    backend: str = ""
    prompt_variant: str = "full"
    max_rounds: int = 5
    focals: List[FocalRow] = Field(default_factory=list)
    generated: int = Field(0, description="Sessions run, infeasible paths excluded")
    valid: int = 0
    valid_rate: float = Field(0.0, ge=0.0, le=1.0)
    valid_by_round: List[int] = Field(default_factory=list, description="Cumulative valid sessions by round index")
    branch_pct: float = 100.0
    line_pct: float = 100.0
    coverage: CoverageReport = Field(default_factory=CoverageReport)
    timing: Optional[PhaseTiming] = Field(None, description="Kept out of report.json; written to timing.json")
