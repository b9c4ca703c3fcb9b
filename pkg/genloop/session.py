"""The generate-validate-repair loop for one (focal method, path) pair."""

import asyncio
import logging
import time
from typing import List, Optional, Protocol

from pydantic import BaseModel, Field

from config.settings import settings
from distill.context import distill
from genloop.prompt import build_prompt, focal_source, related_sources
from genloop.validation import validate
from knowledge.store import KnowledgeBase
from models.context import DistilledContext
from models.errors import BackendFailure
from models.knowledge import CfgPath
from models.session import (
    BackendCapability, GenerationRequest, PromptVariant, RefinementSession, SessionRound, SessionStatus,
    repair_request,
)
from subjectlang.checker import SemanticModel

logger = logging.getLogger(__name__)


class GeneratorBackend(Protocol):
    capability: BackendCapability

    async def produce(self, request: GenerationRequest) -> str: ...


class SessionConfig(BaseModel):
    max_rounds: int = Field(default_factory=lambda: settings.MAX_ROUNDS, ge=1)
    recursion_depth: int = Field(default_factory=lambda: settings.RECURSION_DEPTH, ge=0)
    prompt_variant: PromptVariant = PromptVariant.FULL
    refine: bool = True
    step_budget: int = Field(default_factory=lambda: settings.STEP_BUDGET, ge=1)


async def run_session(
    focal: str,
    path: CfgPath,
    kb: KnowledgeBase,
    backend: GeneratorBackend,
    model: SemanticModel,
    config: Optional[SessionConfig] = None,
    context: Optional[DistilledContext] = None,
) -> RefinementSession:
    config = config or SessionConfig()
    context = context or distill(focal, path, kb, config.recursion_depth)
    session = RefinementSession(focal=focal, path=path, context=context, max_rounds=config.max_rounds)
    if context.infeasible:
        session.status = SessionStatus.INFEASIBLE
        return session

    related: List[str] = []
    if config.prompt_variant == PromptVariant.RAW_CONTEXT:
        related = related_sources(focal, kb, model)
    prompt = build_prompt(context, focal_source(model, focal), kb, config.prompt_variant, related)
    session.prompt = prompt
    request = GenerationRequest(prompt=prompt, context=context)
    limit = config.max_rounds if config.refine else 1

    for index in range(1, limit + 1):
        request = request.model_copy(update={"round": index})
        started = time.perf_counter()
        try:
            candidate = await backend.produce(request)
        except BackendFailure as exc:
            session.generate_seconds += time.perf_counter() - started
            logger.warning("%s round %d: backend %s failed: %s", path.id, index, backend.capability.name, exc.message)
            session.rounds.append(SessionRound(index=index, backend_error=exc.message))
            continue
        session.generate_seconds += time.perf_counter() - started

        started = time.perf_counter()
        outcome = await asyncio.to_thread(validate, candidate, model.units, focal, config.step_budget)
        session.validate_seconds += time.perf_counter() - started
        session.rounds.append(SessionRound(index=index, candidate=candidate, outcome=outcome))
        logger.debug("%s round %d: %s", path.id, index, outcome.kind.value)
        if outcome.valid:
            session.status = SessionStatus.VALID
            return session
        request = repair_request(request, candidate, outcome.failure())

    session.status = SessionStatus.EXHAUSTED
    return session
