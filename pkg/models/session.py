from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field

from models.context import DistilledContext
from models.knowledge import CfgPath
from models.syntax import Diagnostic, Span
from models.trace import ExecutionTrace, TraceEvent

WIRE_FORMAT_VERSION = 1


class PromptVariant(str, Enum):
    FULL = "full"
    RAW_CONTEXT = "raw-context"
    BASIC = "basic"


class Term(BaseModel):
    term: str
    definition: str


class PromptDocument(BaseModel):
    """Structured prompt: persona, terminology, instruction and payload."""

    variant: PromptVariant = PromptVariant.FULL
    persona: str
    terminology: List[Term] = Field(default_factory=list)
    command: List[str] = Field(default_factory=list)
    rules: List[str] = Field(default_factory=list)
    focal: str
    focal_source: str
    path_obligations: List[str] = Field(default_factory=list)
    context_rendering: List[str] = Field(default_factory=list)

    def render(self) -> str:
        lines = ["@persona", self.persona, ""]
        if self.terminology:
            lines.append("@terminology")
            lines.extend(f"- {t.term}: {t.definition}" for t in self.terminology)
            lines.append("")
        lines.append("@instruction")
        lines.append("command:")
        lines.extend(f"  {i}. {step}" for i, step in enumerate(self.command, start=1))
        lines.append("rules:")
        lines.extend(f"  - {rule}" for rule in self.rules)
        lines.extend(["", "@focal_method", self.focal_source.rstrip()])
        if self.path_obligations:
            lines.extend(["", "@path"])
            lines.extend(f"  {o}" for o in self.path_obligations)
        if self.context_rendering:
            lines.extend(["", "@context"])
            lines.extend(self.context_rendering)
        return "\n".join(lines) + "\n"


class FailureStage(str, Enum):
    SYNTAX = "syntax"
    RUNTIME = "runtime"


class Failure(BaseModel):
    stage: FailureStage
    diagnostics: List[Diagnostic] = Field(default_factory=list)
    exception_kind: Optional[str] = None
    message: Optional[str] = None
    span: Optional[Span] = None
    excerpt: List[TraceEvent] = Field(default_factory=list)

    def render(self) -> List[str]:
        if self.stage == FailureStage.SYNTAX:
            return [d.render() for d in self.diagnostics]
        where = f" at {self.span}" if self.span is not None else ""
        lines = [f"{self.exception_kind}{where}: {self.message}"]
        lines.extend(f"  {event.describe()}" for event in self.excerpt)
        return lines


class RequestKind(str, Enum):
    GENERATE = "generate"
    REPAIR = "repair"


class GenerationRequest(BaseModel):
    """What a backend is asked for. ``prompt`` is always the original prompt."""

    kind: RequestKind = RequestKind.GENERATE
    prompt: PromptDocument
    context: DistilledContext
    round: int = 1
    prior_candidate: Optional[str] = None
    failure: Optional[Failure] = None

    def to_wire(self) -> dict:
        payload = {
            "kind": self.kind.value,
            "prompt": self.prompt.model_dump(mode="json"),
            "format_version": WIRE_FORMAT_VERSION,
        }
        if self.kind == RequestKind.REPAIR:
            payload["prior_candidate"] = self.prior_candidate
            payload["failure"] = self.failure.model_dump(mode="json") if self.failure else None
        return payload

    def render(self) -> str:
        """Text sent to chat models: the prompt, plus the failure for repairs."""
        text = self.prompt.render()
        if self.kind != RequestKind.REPAIR:
            return text
        lines = [text, "@repair", "The previous test failed. Fix it and return the complete test class.",
                 "previous test:", self.prior_candidate or "", f"{self.failure.stage.value} failure:"]
        lines.extend(self.failure.render())
        return "\n".join(lines) + "\n"


def repair_request(prior: GenerationRequest, candidate: str, failure: Failure) -> GenerationRequest:
    return GenerationRequest(
        kind=RequestKind.REPAIR, prompt=prior.prompt, context=prior.context,
        round=prior.round + 1, prior_candidate=candidate, failure=failure,
    )


class BackendCapability(BaseModel):
    name: str
    deterministic: bool


class ValidationKind(str, Enum):
    COMPILE_ERROR = "compile-error"
    EXCEPTION_BEFORE_FOCAL = "exception-before-focal"
    VALID = "valid"


class ValidationOutcome(BaseModel):
    kind: ValidationKind
    diagnostics: List[Diagnostic] = Field(default_factory=list)
    trace: Optional[ExecutionTrace] = None

    @property
    def valid(self) -> bool:
        return self.kind == ValidationKind.VALID

    def failure(self) -> Failure:
        if self.kind == ValidationKind.COMPILE_ERROR:
            return Failure(stage=FailureStage.SYNTAX, diagnostics=self.diagnostics)
        event = self.trace.exception if self.trace is not None else None
        if event is None:
            return Failure(stage=FailureStage.RUNTIME, exception_kind="FOCAL_NOT_REACHED",
                           message="the test finished without calling the focal method")
        return Failure(
            stage=FailureStage.RUNTIME, exception_kind=event.exception_kind, message=event.message,
            span=event.span, excerpt=self.trace.excerpt_before_exception(),
        )


class SessionStatus(str, Enum):
    VALID = "valid"
    EXHAUSTED = "exhausted"
    INFEASIBLE = "infeasible-skipped"


class SessionRound(BaseModel):
    index: int
    candidate: str = ""
    outcome: Optional[ValidationOutcome] = None
    backend_error: Optional[str] = None

    @property
    def valid(self) -> bool:
        return self.outcome is not None and self.outcome.valid


class RefinementSession(BaseModel):
    focal: str
    path: CfgPath
    context: Optional[DistilledContext] = None
    prompt: Optional[PromptDocument] = None
    rounds: List[SessionRound] = Field(default_factory=list)
    status: SessionStatus = SessionStatus.EXHAUSTED
    max_rounds: int = 5
    generate_seconds: float = 0.0
    validate_seconds: float = 0.0

    @property
    def valid_round(self) -> Optional[int]:
        if self.status == SessionStatus.VALID:
            return self.rounds[-1].index
        return None

    @property
    def test_source(self) -> Optional[str]:
        if self.status == SessionStatus.VALID:
            return self.rounds[-1].candidate
        return None

    @property
    def trace(self) -> Optional[ExecutionTrace]:
        if self.status == SessionStatus.VALID:
            return self.rounds[-1].outcome.trace
        return None
