"""Prompt construction, candidate validation and the refinement loop."""

import asyncio

import pytest

from distill.context import distill
from genloop.prompt import build_prompt, focal_source, related_sources
from genloop.session import SessionConfig, run_session
from genloop.validation import validate
from models.errors import BackendFailure, InfeasibleContextError
from models.session import (
    BackendCapability, FailureStage, PromptVariant, RequestKind, SessionStatus, ValidationKind,
)
from services.scripted_service import ScriptedBackend

from conftest import CONDITION, CONTAINS

SHORT_INDEX_TEST = """
class Test {
    public static void test() {
        Metaphone target = new Metaphone();
        bool r = reflect call target.Metaphone#conditionC0("AB", -1);
    }
}
"""

THROWS_BEFORE_FOCAL = """
class Test {
    public static void test() {
        int z = 0;
        int q = 1 / z;
        Metaphone target = new Metaphone();
        bool r = reflect call target.Metaphone#conditionC0("AB", -1);
    }
}
"""

THROWS_AFTER_FOCAL = """
class Test {
    public static void test() {
        Metaphone target = new Metaphone();
        bool r = reflect call target.Metaphone#conditionC0("AB", -1);
        int z = 0;
        int q = 1 / z;
    }
}
"""

DIRECT_PRIVATE_CALL = """
class Test {
    public static void test() {
        Metaphone target = new Metaphone();
        bool r = target.conditionC0("AB", -1);
    }
}
"""


class RecordingBackend:
    """Wraps another backend and keeps every request it sees."""

    def __init__(self, inner):
        self.inner = inner
        self.capability = inner.capability
        self.requests = []

    async def produce(self, request):
        self.requests.append(request)
        return await self.inner.produce(request)


class FailingBackend:
    capability = BackendCapability(name="failing", deterministic=True)

    def __init__(self, failures: int, then: str):
        self.failures = failures
        self.then = then

    async def produce(self, request):
        if self.failures:
            self.failures -= 1
            raise BackendFailure("generator unavailable")
        return self.then


def short_index_path(kb):
    return next(p for p in kb.paths_of(CONDITION) if [ob.outcome for ob in p.obligations] == [False, True])


def infeasible_twice_path(kb):
    focal = "MathUtil#twice/(int)"
    return next(p for p in kb.paths_of(focal) if [ob.outcome for ob in p.obligations] == [True, False])


class TestPrompt:
    def test_full_prompt_carries_the_distilled_context(self, metaphone_kb, metaphone_model):
        context = distill(CONDITION, short_index_path(metaphone_kb), metaphone_kb)
        text = build_prompt(context, focal_source(metaphone_model, CONDITION), metaphone_kb).render()
        assert "index < 0" in text
        assert "reflect call target.Metaphone#conditionC0" in text
        assert "There are no variables to set" in text
        assert "@path" in text
        assert f"dependent method {CONTAINS}: private static bool" in text

    def test_prompt_text_is_deterministic(self, metaphone_kb, metaphone_model):
        def render():
            path = metaphone_kb.path(CONDITION, 2)
            context = distill(CONDITION, path, metaphone_kb)
            return build_prompt(context, focal_source(metaphone_model, CONDITION), metaphone_kb).render()

        assert render() == render()

    def test_basic_variant_omits_the_path(self, metaphone_kb, metaphone_model):
        context = distill(CONDITION, short_index_path(metaphone_kb), metaphone_kb)
        document = build_prompt(context, focal_source(metaphone_model, CONDITION), metaphone_kb, PromptVariant.BASIC)
        assert document.path_obligations == []
        assert "@path" not in document.render()

    def test_raw_context_variant_lists_related_sources(self, metaphone_kb, metaphone_model):
        context = distill(CONDITION, short_index_path(metaphone_kb), metaphone_kb)
        related = related_sources(CONDITION, metaphone_kb, metaphone_model)
        text = build_prompt(context, focal_source(metaphone_model, CONDITION), metaphone_kb,
                            PromptVariant.RAW_CONTEXT, related).render()
        assert f"// {CONTAINS}" in text
        assert "index < 0" not in text

    def test_field_setter_is_described(self, corpus_kb, corpus_model):
        focal = "Counter#status/()"
        path = next(p for p in corpus_kb.paths_of(focal) if [ob.outcome for ob in p.obligations] == [True])
        text = build_prompt(distill(focal, path, corpus_kb), focal_source(corpus_model, focal), corpus_kb).render()
        assert "reflect set target.Counter#count = ...;" in text
        assert "so that Counter.count == 0." in text

    def test_infeasible_context_has_no_prompt(self, corpus_kb, corpus_model):
        context = distill("MathUtil#twice/(int)", infeasible_twice_path(corpus_kb), corpus_kb)
        with pytest.raises(InfeasibleContextError):
            build_prompt(context, focal_source(corpus_model, "MathUtil#twice/(int)"), corpus_kb)


class TestValidation:
    def test_reflective_test_is_valid(self, metaphone_model):
        outcome = validate(SHORT_INDEX_TEST, metaphone_model.units, CONDITION)
        assert outcome.kind == ValidationKind.VALID
        assert outcome.trace.exception is None
        outcomes = [taken for _, taken in outcome.trace.focal_branch_events()]
        assert outcomes == [False, True]

    def test_syntax_error(self, metaphone_model):
        outcome = validate("class Test {", metaphone_model.units, CONDITION)
        assert outcome.kind == ValidationKind.COMPILE_ERROR
        assert outcome.diagnostics[0].code == "SYNTAX_ERROR"
        assert outcome.failure().stage == FailureStage.SYNTAX

    def test_private_access_without_reflection(self, metaphone_model):
        outcome = validate(DIRECT_PRIVATE_CALL, metaphone_model.units, CONDITION)
        assert outcome.kind == ValidationKind.COMPILE_ERROR
        assert "ACCESS_PRIVATE" in [d.code for d in outcome.diagnostics]

    def test_missing_entry(self, metaphone_model):
        outcome = validate("class Test {\n    public static void other() {\n    }\n}\n",
                           metaphone_model.units, CONDITION)
        assert outcome.kind == ValidationKind.COMPILE_ERROR
        assert outcome.diagnostics[0].code == "MISSING_ENTRY"

    def test_exception_before_the_focal_call(self, metaphone_model):
        outcome = validate(THROWS_BEFORE_FOCAL, metaphone_model.units, CONDITION)
        assert outcome.kind == ValidationKind.EXCEPTION_BEFORE_FOCAL
        failure = outcome.failure()
        assert failure.stage == FailureStage.RUNTIME
        assert failure.exception_kind == "DIVISION_BY_ZERO"

    def test_exception_after_the_focal_call_is_still_valid(self, metaphone_model):
        outcome = validate(THROWS_AFTER_FOCAL, metaphone_model.units, CONDITION)
        assert outcome.kind == ValidationKind.VALID
        assert outcome.trace.exception.exception_kind == "DIVISION_BY_ZERO"

    def test_validation_leaves_the_project_untouched(self, metaphone_model):
        before = [unit.model_dump() for unit in metaphone_model.units]
        validate(SHORT_INDEX_TEST, metaphone_model.units, CONDITION)
        assert [unit.model_dump() for unit in metaphone_model.units] == before


class TestSession:
    @pytest.mark.parametrize("broken", [0, 1, 2, 3, 4])
    def test_valid_after_broken_rounds(self, metaphone_kb, metaphone_model, broken):
        backend = ScriptedBackend.broken_then(broken, SHORT_INDEX_TEST)
        session = asyncio.run(run_session(
            CONDITION, short_index_path(metaphone_kb), metaphone_kb, backend, metaphone_model,
            SessionConfig(max_rounds=5),
        ))
        assert session.status == SessionStatus.VALID
        assert session.valid_round == broken + 1
        assert len(session.rounds) == broken + 1
        assert session.test_source == SHORT_INDEX_TEST

    def test_exhausted_after_max_rounds(self, metaphone_kb, metaphone_model):
        backend = ScriptedBackend.broken_then(5, SHORT_INDEX_TEST)
        session = asyncio.run(run_session(
            CONDITION, short_index_path(metaphone_kb), metaphone_kb, backend, metaphone_model,
            SessionConfig(max_rounds=5),
        ))
        assert session.status == SessionStatus.EXHAUSTED
        assert len(session.rounds) == 5
        assert session.trace is None

    def test_refinement_disabled_stops_after_one_round(self, metaphone_kb, metaphone_model):
        backend = ScriptedBackend.broken_then(1, SHORT_INDEX_TEST)
        session = asyncio.run(run_session(
            CONDITION, short_index_path(metaphone_kb), metaphone_kb, backend, metaphone_model,
            SessionConfig(max_rounds=5, refine=False),
        ))
        assert session.status == SessionStatus.EXHAUSTED
        assert len(session.rounds) == 1

    def test_repair_request_carries_the_failure(self, metaphone_kb, metaphone_model):
        backend = RecordingBackend(ScriptedBackend.broken_then(1, SHORT_INDEX_TEST))
        asyncio.run(run_session(
            CONDITION, short_index_path(metaphone_kb), metaphone_kb, backend, metaphone_model,
        ))
        first, second = backend.requests
        assert first.kind == RequestKind.GENERATE
        assert second.kind == RequestKind.REPAIR
        assert second.round == 2
        assert second.prior_candidate == "class Test {"
        assert second.failure.stage == FailureStage.SYNTAX
        assert second.prompt == first.prompt
        assert "@repair" in second.render()

    def test_backend_failure_uses_a_round(self, metaphone_kb, metaphone_model):
        backend = FailingBackend(failures=2, then=SHORT_INDEX_TEST)
        session = asyncio.run(run_session(
            CONDITION, short_index_path(metaphone_kb), metaphone_kb, backend, metaphone_model,
            SessionConfig(max_rounds=5),
        ))
        assert session.status == SessionStatus.VALID
        assert [r.backend_error for r in session.rounds[:2]] == ["generator unavailable"] * 2
        assert session.valid_round == 3

    def test_infeasible_path_is_skipped(self, corpus_kb, corpus_model):
        backend = RecordingBackend(ScriptedBackend.broken_then(0, SHORT_INDEX_TEST))
        session = asyncio.run(run_session(
            "MathUtil#twice/(int)", infeasible_twice_path(corpus_kb), corpus_kb, backend, corpus_model,
        ))
        assert session.status == SessionStatus.INFEASIBLE
        assert session.rounds == []
        assert backend.requests == []
