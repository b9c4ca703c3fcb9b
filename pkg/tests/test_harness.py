"""Focal selection, run configuration, the end-to-end pipeline, reports, CLI and HTTP API."""

import asyncio
import json
import shutil
from pathlib import Path

import pytest
from click.testing import CliRunner
from fastapi.testclient import TestClient

from app.main import app
from config.settings import Settings
from distill.context import distill
from genloop.session import SessionConfig, run_session
from harness.cli import EXIT_COMPILE, EXIT_CONFIG, cli
from harness.pipeline import BackendKind, RunConfig, artifact_stem, prepare_output, run
from harness.report import ReportFormat, load_report, render_table, report_render
from harness.selection import FocalFilter, select_focals
from knowledge.store import build_kb
from models.errors import ConfigError, NotFoundError, VersionMismatchError
from models.report import RunReport
from models.session import SessionStatus
from services.brute_force_service import BruteForceBackend, BruteForceSearch, Domains
from subjectlang.coverage import outcome_id
from subjectlang.project import compile_sources

from conftest import CONDITION, CONTAINS, CORPUS, IS_VOWEL


@pytest.fixture
def project(tmp_path):
    """A copy of the running example and the arithmetic helpers."""
    root = tmp_path / "project"
    root.mkdir()
    for name in ("Metaphone.sj", "MathUtil.sj"):
        shutil.copy(CORPUS / name, root / name)
    return root


def small_config(project_dir, output_dir, **overrides) -> RunConfig:
    return RunConfig(project_dir=str(project_dir), output_dir=str(output_dir), domains=Domains.small(), **overrides)


def tree(root: Path):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


class TestSelection:
    def test_default_filter_needs_branches_and_dependencies(self, metaphone_kb, corpus_kb):
        assert select_focals(metaphone_kb) == [CONDITION, CONTAINS, IS_VOWEL]
        selected = select_focals(corpus_kb)
        assert "MathUtil#isPositive/(int)" not in selected
        assert "Dog#noise/()" not in selected
        assert "Chain#top/(int)" in selected

    def test_all_skips_abstract_methods(self, corpus_kb):
        selected = select_focals(corpus_kb, FocalFilter.ALL)
        assert "Dog#noise/()" in selected
        assert "Shape#area/(int)" not in selected

    def test_explicit_list_keeps_its_order_without_duplicates(self, metaphone_kb):
        selected = select_focals(metaphone_kb, FocalFilter.EXPLICIT, ["isVowel", "Metaphone.contains", CONTAINS])
        assert selected == [IS_VOWEL, CONTAINS]
        with pytest.raises(NotFoundError):
            select_focals(metaphone_kb, FocalFilter.EXPLICIT, ["Metaphone.nope"])


class TestRunConfig:
    def test_backend_inputs_are_required(self):
        with pytest.raises(ConfigError):
            RunConfig.load(project_dir="p", backend="scripted")
        with pytest.raises(ConfigError):
            RunConfig.load(project_dir="p", focal_filter="explicit")
        with pytest.raises(ConfigError):
            RunConfig.load(project_dir="p", max_rounds=0)

    def test_file_then_overrides(self, tmp_path):
        config_file = tmp_path / "run.json"
        config_file.write_text(json.dumps({"max_rounds": 2, "path_cap": 9, "backend": "brute-force"}))
        config = RunConfig.load(str(config_file), project_dir="p", max_rounds=3, path_cap=None)
        assert config.max_rounds == 3
        assert config.path_cap == 9
        assert config.backend == BackendKind.BRUTE_FORCE
        assert config.session_config().max_rounds == 3

    def test_unreadable_config_and_output(self, tmp_path):
        bad = tmp_path / "run.json"
        bad.write_text("{oops")
        with pytest.raises(ConfigError):
            RunConfig.load(str(bad), project_dir="p")
        blocker = tmp_path / "file"
        blocker.write_text("")
        with pytest.raises(ConfigError):
            prepare_output(str(blocker / "out"))

    def test_settings_read_an_env_file_and_ignore_unknown_keys(self, tmp_path):
        env_file = tmp_path / ".env"
        env_file.write_text("STEP_BUDGET=1234\nUNRELATED_KEY=1\n")
        loaded = Settings(_env_file=str(env_file))
        assert loaded.STEP_BUDGET == 1234
        assert not hasattr(loaded, "UNRELATED_KEY")

    def test_artifact_stem(self, metaphone_kb):
        fact = metaphone_kb.facts.method(CONTAINS)
        assert artifact_stem(fact, metaphone_kb, 3) == "Metaphone_contains_p3"


class TestPipeline:
    def test_brute_force_run_writes_every_artifact(self, project, tmp_path):
        out = tmp_path / "out"
        report = asyncio.run(run(small_config(project, out)))
        assert report.backend == "brute-force"
        assert {"kb.json", "report.json", "timing.json"} <= set(tree(out))
        written = (out / "tests" / "Metaphone_conditionC0_p0.sj").read_text()
        assert written.startswith(f"// focal: {CONDITION} path: 0\n")
        assert (out / "prompts" / "Metaphone_conditionC0_p0.txt").is_file()

        row = next(r for r in report.focals if r.focal == CONDITION)
        assert row.paths_found == 4
        assert row.valid_tests == 4
        assert row.branch_pct == 100.0

        twice = next(r for r in report.focals if r.focal == "MathUtil#twice/(int)")
        assert twice.infeasible == 1
        assert report.generated == sum(r.sessions_run for r in report.focals)
        assert report.valid_rate == round(report.valid / report.generated, 4)
        assert report.valid_by_round[0] == report.valid_by_round[-1] == report.valid

    def test_two_runs_are_byte_identical(self, project, tmp_path):
        first, second = tmp_path / "first", tmp_path / "second"
        asyncio.run(run(small_config(project, first, parallelism=1)))
        asyncio.run(run(small_config(project, second, parallelism=4)))
        left, right = tree(first), tree(second)
        left.pop("timing.json")
        right.pop("timing.json")
        assert left == right

    def test_empty_project(self, tmp_path):
        empty = tmp_path / "empty"
        empty.mkdir()
        report = asyncio.run(run(small_config(empty, tmp_path / "out")))
        assert report.focals == []
        assert report.generated == 0
        assert report.valid_rate == 0.0
        assert report.branch_pct == 100.0

    def test_all_broken_scripted_run(self, project, tmp_path):
        script = tmp_path / "script.json"
        script.write_text(json.dumps({"*": ["class Test {"]}))
        config = small_config(project, tmp_path / "out", backend="scripted", script_file=str(script), max_rounds=2)
        report = asyncio.run(run(config))
        assert report.generated > 0
        assert report.valid == 0
        assert report.valid_rate == 0.0
        assert report.valid_by_round == [0, 0]
        for row in report.focals:
            assert row.invalid_tests == row.sessions_run
            assert all(s.last_outcome == "compile-error" for s in row.sessions if s.status == SessionStatus.EXHAUSTED)
        assert not (tmp_path / "out" / "tests").exists()

    @pytest.mark.slow
    def test_generated_coverage_matches_the_exhaustive_oracle(self):
        """Over the whole corpus, valid tests reach exactly the branch outcomes reachable over the default domains."""
        files = sorted(CORPUS.glob("*.sj"))
        model = compile_sources({p.name: p.read_text(encoding="utf-8") for p in files})
        kb = build_kb(model)
        search = BruteForceSearch(model, kb, Domains())
        focals = select_focals(kb, FocalFilter.ALL)
        assert {kb.facts.method(f).path for f in focals} == {p.name for p in files}
        backend = BruteForceBackend(search)
        config = SessionConfig(max_rounds=1)
        for focal in focals:
            covered = set()
            for path in kb.paths_of(focal):
                context = distill(focal, path, kb)
                session = asyncio.run(run_session(focal, path, kb, backend, model, config, context))
                if session.status == SessionStatus.VALID:
                    covered |= {outcome_id(b, o) for b, o in session.trace.focal_branch_events()}
            assert covered == search.reachable_outcomes(focal), focal


class TestReport:
    def test_json_report_round_trips(self, project, tmp_path):
        out = tmp_path / "out"
        report = asyncio.run(run(small_config(project, out)))
        loaded = load_report(out)
        assert report_render(loaded) == report_render(report)
        assert loaded.timing is not None
        assert (out / "report.json").read_text() == report_render(report, ReportFormat.JSON)

    def test_empty_table_has_a_total_row(self):
        text = render_table(RunReport())
        assert "TOTAL" in text
        assert "valid rate: 0.00%" in text

    def test_missing_and_foreign_reports(self, tmp_path):
        with pytest.raises(NotFoundError):
            load_report(tmp_path)
        (tmp_path / "report.json").write_text(json.dumps({"format_version": 99}))
        with pytest.raises(VersionMismatchError):
            load_report(tmp_path)


class TestCli:
    def test_analyze_writes_the_graph(self, project, tmp_path):
        target = tmp_path / "kb.json"
        result = CliRunner().invoke(cli, ["analyze", str(project), "-o", str(target)])
        assert result.exit_code == 0
        assert json.loads(target.read_text())["format_version"] == 1

    def test_paths(self, project):
        result = CliRunner().invoke(cli, ["paths", str(project), "-m", "Metaphone.contains"])
        assert result.exit_code == 0
        assert f"{CONTAINS}/p:5" in result.output

    def test_compile_error_exit_code(self, tmp_path):
        broken = tmp_path / "broken"
        broken.mkdir()
        (broken / "A.sj").write_text("class A {\n    public int f() {\n        return true;\n    }\n}\n")
        result = CliRunner().invoke(cli, ["analyze", str(broken)])
        assert result.exit_code == EXIT_COMPILE

    def test_config_error_exit_code(self, project, tmp_path):
        result = CliRunner().invoke(cli, ["generate", str(project), "--backend", "scripted",
                                          "-o", str(tmp_path / "out")])
        assert result.exit_code == EXIT_CONFIG

    def test_generate_then_report(self, project, tmp_path):
        out = tmp_path / "out"
        result = CliRunner().invoke(cli, ["generate", str(project), "-m", "Metaphone.isVowel",
                                          "-o", str(out), "--format", "json"])
        assert result.exit_code == 0
        assert load_report(out).valid == 2
        result = CliRunner().invoke(cli, ["report", str(out)])
        assert result.exit_code == 0
        assert "TOTAL" in result.output


@pytest.fixture
def client():
    return TestClient(app)


class TestHttpApi:
    @pytest.fixture
    def sources(self, metaphone_source):
        return {"Metaphone.sj": metaphone_source}

    def test_health(self, client):
        response = client.get("/api/health")
        assert response.status_code == 200
        assert response.json()["status"] == "healthy"

    def test_paths(self, client, sources):
        response = client.post("/api/paths", json={"sources": sources, "method": "Metaphone.contains"})
        assert response.status_code == 200
        assert len(response.json()["paths"]) == 6

    def test_distill(self, client, sources):
        response = client.post("/api/distill", json={"sources": sources, "method": CONDITION, "path": 1})
        assert response.status_code == 200
        body = response.json()
        assert body["invocation"]["kind"] == "instance-reflective"
        assert body["resolutions"][0]["status"] == "resolved"
        assert body["infeasible"] is False

    def test_errors(self, client, sources):
        response = client.post("/api/paths", json={"sources": sources, "method": "Metaphone.nope"})
        assert response.status_code == 404
        assert response.json()["detail"]["code"] == "NOT_FOUND"
        assert client.post("/api/paths", json={"method": "Metaphone.contains"}).status_code == 422
        broken = {"A.sj": "class A {\n    public int f() {\n        return true;\n    }\n}\n"}
        response = client.post("/api/analyze", json={"sources": broken})
        assert response.status_code == 422
        assert response.json()["detail"]["code"] == "PROJECT_COMPILE_ERROR"

    def test_generate(self, client, sources, tmp_path):
        response = client.post("/api/generate", json={
            "sources": sources, "methods": ["Metaphone.isVowel"], "output_dir": str(tmp_path / "out"),
        })
        assert response.status_code == 200
        assert response.json()["valid"] == 2
