"""End-to-end run: extract, distill, generate and validate, then measure coverage."""

import asyncio
import json
import logging
import time
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError, model_validator

from config.settings import settings
from distill.context import distill
from genloop.session import GeneratorBackend, SessionConfig, run_session
from harness.selection import FocalFilter, select_focals
from knowledge.persistence import dumps_kb
from knowledge.store import KnowledgeBase, build_kb
from models.context import DistilledContext
from models.errors import ConfigError, PathwiseError
from models.knowledge import CfgPath, MethodFact
from models.report import FocalRow, PhaseTiming, RunReport, SessionRow
from models.session import PromptVariant, RefinementSession, SessionStatus
from services.brute_force_service import BruteForceBackend, BruteForceSearch, Domains
from subjectlang.checker import SemanticModel
from subjectlang.coverage import measure_coverage
from subjectlang.project import load_project

logger = logging.getLogger(__name__)


class BackendKind(str, Enum):
    BRUTE_FORCE = "brute-force"
    SCRIPTED = "scripted"
    EXTERNAL = "external"
    OPENAI = "openai"


class CoverageScope(str, Enum):
    FOCAL = "focal"
    PROJECT = "project"


class RunConfig(BaseModel):
    project_dir: str
    focal_filter: FocalFilter = FocalFilter.BRANCHING_AND_DEPENDENT
    methods: List[str] = Field(default_factory=list)
    backend: BackendKind = BackendKind.BRUTE_FORCE
    script_file: Optional[str] = None
    command: Optional[str] = None
    timeout: float = Field(default_factory=lambda: settings.BACKEND_TIMEOUT, gt=0)
    max_rounds: int = Field(default_factory=lambda: settings.MAX_ROUNDS, ge=1)
    path_cap: int = Field(default_factory=lambda: settings.PATH_CAP, ge=1)
    recursion_depth: int = Field(default_factory=lambda: settings.RECURSION_DEPTH, ge=0)
    step_budget: int = Field(default_factory=lambda: settings.STEP_BUDGET, ge=1)
    domains: Domains = Field(default_factory=Domains)
    parallelism: int = Field(default_factory=lambda: settings.PARALLELISM, ge=1)
    output_dir: str = Field(default_factory=lambda: settings.OUTPUT_DIR)
    prompt_variant: PromptVariant = PromptVariant.FULL
    refine: bool = True
    scope: CoverageScope = CoverageScope.FOCAL

    @model_validator(mode="after")
    def _backend_inputs(self) -> "RunConfig":
        if self.backend == BackendKind.SCRIPTED and not self.script_file:
            raise ValueError("the scripted backend needs script_file")
        if self.backend == BackendKind.EXTERNAL and not (self.command or settings.EXTERNAL_COMMAND):
            raise ValueError("the external backend needs command")
        if self.focal_filter == FocalFilter.EXPLICIT and not self.methods:
            raise ValueError("the explicit focal filter needs methods")
        return self

    @classmethod
    def load(cls, config_file: Optional[str] = None, **overrides: Any) -> "RunConfig":
        """Defaults from settings, then the JSON file, then non-None overrides."""
        values: Dict[str, Any] = {}
        if config_file:
            try:
                values = json.loads(Path(config_file).read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {config_file}: {exc}", detail={"config": config_file})
            if not isinstance(values, dict):
                raise ConfigError(f"config {config_file} must hold a JSON object", detail={"config": config_file})
        values.update({key: value for key, value in overrides.items() if value is not None})
        try:
            return cls(**values)
        except ValidationError as exc:
            raise ConfigError(f"invalid configuration: {exc.errors()[0]['msg']}",
                              detail={"errors": json.loads(exc.json())})

    def session_config(self) -> SessionConfig:
        return SessionConfig(
            max_rounds=self.max_rounds, recursion_depth=self.recursion_depth,
            prompt_variant=self.prompt_variant, refine=self.refine, step_budget=self.step_budget,
        )


def make_backend(config: RunConfig, model: SemanticModel, kb: KnowledgeBase) -> GeneratorBackend:
    if config.backend == BackendKind.BRUTE_FORCE:
        return BruteForceBackend(BruteForceSearch(model, kb, config.domains, config.step_budget))
    if config.backend == BackendKind.SCRIPTED:
        from services.scripted_service import ScriptedBackend
        return ScriptedBackend.from_file(config.script_file)
    if config.backend == BackendKind.EXTERNAL:
        from services.external_service import ExternalBackend
        return ExternalBackend(config.command, config.timeout)
    from services.openai_service import OpenAIService
    return OpenAIService()


def artifact_stem(fact: MethodFact, kb: KnowledgeBase, index: int) -> str:
    overloaded = sum(1 for m in kb.facts.methods if m.owner == fact.owner and m.name == fact.name) > 1
    stem = f"{fact.owner}_{fact.name}"
    if overloaded:
        stem += "_" + ("_".join(fact.param_types) or "void")
    return f"{stem}_p{index}"


def _last_outcome(session: RefinementSession) -> Optional[str]:
    if not session.rounds:
        return None
    last = session.rounds[-1]
    if last.outcome is not None:
        return last.outcome.kind.value
    return f"backend-failure: {last.backend_error}"


def artifact_header(session: RefinementSession) -> str:
    return f"// focal: {session.focal} path: {session.path.index}\n"


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def prepare_output(output_dir: str) -> Path:
    root = Path(output_dir)
    try:
        root.mkdir(parents=True, exist_ok=True)
        marker = root / ".write-check"
        marker.write_text("", encoding="utf-8")
        marker.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {output_dir} is not writable: {exc}", detail={"output_dir": output_dir})
    return root


def dumps_report(report: RunReport) -> str:
    document = report.model_dump(mode="json", exclude={"timing"})
    return json.dumps(document, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


async def run(config: RunConfig, backend: Optional[GeneratorBackend] = None,
              model: Optional[SemanticModel] = None) -> RunReport:
    """Run the pipeline; ``model`` replaces loading ``config.project_dir`` when given."""
    root = prepare_output(config.output_dir)
    timing = PhaseTiming()

    started = time.perf_counter()
    if model is None:
        model = load_project(config.project_dir)
    kb = build_kb(model, config.path_cap)
    timing.extract = time.perf_counter() - started
    _write(root / "kb.json", dumps_kb(kb))

    backend = backend or make_backend(config, model, kb)
    focals = select_focals(kb, config.focal_filter, config.methods)
    rows: Dict[str, FocalRow] = {}
    jobs: List[Tuple[str, CfgPath, DistilledContext]] = []

    started = time.perf_counter()
    for focal in focals:
        row = FocalRow(focal=focal, truncated=kb.is_truncated(focal))
        rows[focal] = row
        try:
            row.paths_found = len(kb.paths_of(focal))
            contexts = [(path, distill(focal, path, kb, config.recursion_depth)) for path in kb.paths_of(focal)]
        except PathwiseError as exc:
            logger.warning("skipping %s: %s", focal, exc.message)
            row.error = f"{exc.code}: {exc.message}"
            continue
        jobs.extend((focal, path, context) for path, context in contexts)
    timing.distill = time.perf_counter() - started

    semaphore = asyncio.Semaphore(config.parallelism)
    session_config = config.session_config()

    async def one(job: Tuple[str, CfgPath, DistilledContext]) -> RefinementSession:
        focal, path, context = job
        async with semaphore:
            return await run_session(focal, path, kb, backend, model, session_config, context)

    sessions = await asyncio.gather(*(one(job) for job in jobs))

    traces = []
    for session in sessions:
        timing.generate += session.generate_seconds
        timing.validation += session.validate_seconds
        row = rows[session.focal]
        stem = artifact_stem(kb.facts.method(session.focal), kb, session.path.index)
        entry = SessionRow(
            path=session.path.id, status=session.status, rounds=len(session.rounds),
            valid_round=session.valid_round, last_outcome=_last_outcome(session),
        )
        row.status_breakdown[session.status.value] = row.status_breakdown.get(session.status.value, 0) + 1
        if session.prompt is not None:
            _write(root / "prompts" / f"{stem}.txt", session.prompt.render())
        if session.status == SessionStatus.INFEASIBLE:
            row.infeasible += 1
        else:
            row.sessions_run += 1
        if session.status == SessionStatus.VALID:
            row.valid_tests += 1
            entry.test_file = f"tests/{stem}.sj"
            _write(root / entry.test_file, artifact_header(session) + session.test_source)
            traces.append(session.trace)
        elif session.status == SessionStatus.EXHAUSTED:
            row.invalid_tests += 1
        row.sessions.append(entry)

    if config.scope == CoverageScope.PROJECT:
        scope = [fact.id for fact in kb.facts.methods if not fact.is_abstract]
    else:
        scope = focals
    coverage = measure_coverage(traces, model, scope)
    for focal, row in rows.items():
        method = coverage.methods.get(focal)
        if method is not None:
            row.branch_pct, row.line_pct = method.branch_pct, method.line_pct

    generated = sum(row.sessions_run for row in rows.values())
    valid = sum(row.valid_tests for row in rows.values())
    report = RunReport(
        project=config.project_dir,
        backend=backend.capability.name,
        prompt_variant=config.prompt_variant.value,
        max_rounds=config.max_rounds,
        focals=list(rows.values()),
        generated=generated,
        valid=valid,
        valid_rate=round(valid / generated, 4) if generated else 0.0,
        valid_by_round=[
            sum(1 for s in sessions if s.valid_round is not None and s.valid_round <= r)
            for r in range(1, config.max_rounds + 1)
        ],
        branch_pct=coverage.branch_pct,
        line_pct=coverage.line_pct,
        coverage=coverage,
        timing=timing,
    )
    _write(root / "report.json", dumps_report(report))
    _write(root / "timing.json", json.dumps(timing.model_dump(mode="json"), sort_keys=True, indent=2) + "\n")
    logger.info(
        "run finished: %d session(s), %d valid, branch %.2f%%, line %.2f%% "
        "(extract %.2fs, distill %.2fs, generate %.2fs, validate %.2fs)",
        generated, valid, report.branch_pct, report.line_pct,
        timing.extract, timing.distill, timing.generate, timing.validation,
    )
    return report
