"""Command-line front end: ``python -m harness.cli <command>``."""

import asyncio
import functools
import json
import logging
import sys
from typing import Optional

import click

from config.settings import settings
from distill.context import distill as distill_path, render_obligations
from harness.pipeline import BackendKind, CoverageScope, RunConfig, run
from harness.report import ReportFormat, load_report, report_render
from harness.selection import FocalFilter
from knowledge.persistence import dumps_kb
from knowledge.store import build_kb
from models.errors import ConfigError, PathwiseError, ProjectCompileError
from models.session import PromptVariant
from subjectlang.project import load_project

logger = logging.getLogger(__name__)

EXIT_FAILURE = 1
EXIT_COMPILE = 2
EXIT_CONFIG = 3


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else settings.LOG_LEVEL.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def handle_errors(command):
    """Map engine errors to exit codes with a one-line message on stderr."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        ctx = click.get_current_context()
        try:
            return command(*args, **kwargs)
        except ProjectCompileError as exc:
            for diagnostic in exc.diagnostics:
                click.echo(diagnostic.render(), err=True)
            ctx.exit(EXIT_COMPILE)
        except ConfigError as exc:
            click.echo(f"{exc.code}: {exc.message}", err=True)
            ctx.exit(EXIT_CONFIG)
        except PathwiseError as exc:
            click.echo(f"{exc.code}: {exc.message}", err=True)
            ctx.exit(EXIT_FAILURE)

    return wrapper


def _emit(text: str, output: Optional[str]) -> None:
    if output:
        with open(output, "w", encoding="utf-8") as sink:
            sink.write(text)
    else:
        click.echo(text, nl=False)


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Log at DEBUG level.")
def cli(verbose: bool) -> None:
    """Path-sensitive unit test generation for subject-language projects."""
    configure_logging(verbose)


@cli.command()
@click.argument("project_dir", type=click.Path(file_okay=False))
@click.option("--path-cap", type=int, default=None, help="Maximum paths per method.")
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None)
@handle_errors
def analyze(project_dir: str, path_cap: Optional[int], output: Optional[str]) -> None:
    """Build the knowledge base and print it as JSON."""
    kb = build_kb(load_project(project_dir), path_cap)
    _emit(dumps_kb(kb), output)


@cli.command()
@click.argument("project_dir", type=click.Path(file_okay=False))
@click.option("--method", "-m", "method_ref", required=True, help="Method id, Owner.name or signature.")
@click.option("--path-cap", type=int, default=None)
@handle_errors
def paths(project_dir: str, method_ref: str, path_cap: Optional[int]) -> None:
    """List the CFG paths of one method."""
    kb = build_kb(load_project(project_dir), path_cap)
    method = kb.method_of(method_ref)
    cfg = kb.cfg_of(method.id)
    listing = [
        {"id": path.id, "index": path.index, "nodes": path.node_ids,
         "obligations": render_obligations(cfg, path)}
        for path in kb.paths_of(method.id)
    ]
    document = {"method": method.id, "truncated": kb.is_truncated(method.id), "paths": listing}
    click.echo(json.dumps(document, indent=2, sort_keys=True))


@cli.command()
@click.argument("project_dir", type=click.Path(file_okay=False))
@click.option("--method", "-m", "method_ref", required=True)
@click.option("--path", "-p", "path_index", type=int, required=True, help="Path index.")
@click.option("--depth", type=int, default=None, help="Recursion depth for dependent methods.")
@handle_errors
def distill(project_dir: str, method_ref: str, path_index: int, depth: Optional[int]) -> None:
    """Print the distilled context of one path as JSON."""
    kb = build_kb(load_project(project_dir))
    method = kb.method_of(method_ref)
    context = distill_path(method.id, kb.path(method.id, path_index), kb, depth)
    click.echo(context.model_dump_json(indent=2))


@cli.command()
@click.argument("project_dir", type=click.Path(file_okay=False))
@click.option("--config", "config_file", type=click.Path(dir_okay=False), default=None,
              help="JSON file mirroring RunConfig; flags override it.")
@click.option("--backend", type=click.Choice([b.value for b in BackendKind]), default=None)
@click.option("--script", "script_file", type=click.Path(dir_okay=False), default=None,
              help="Response script for the scripted backend.")
@click.option("--command", default=None, help="Command line of the external backend.")
@click.option("--timeout", type=float, default=None)
@click.option("--filter", "focal_filter", type=click.Choice([f.value for f in FocalFilter]), default=None)
@click.option("--method", "-m", "methods", multiple=True, help="Focal method (repeatable, implies --filter explicit).")
@click.option("--max-rounds", type=int, default=None)
@click.option("--path-cap", type=int, default=None)
@click.option("--recursion-depth", type=int, default=None)
@click.option("--parallelism", "-j", type=int, default=None)
@click.option("--output-dir", "-o", default=None)
@click.option("--prompt-variant", type=click.Choice([v.value for v in PromptVariant]), default=None)
@click.option("--no-refine", is_flag=True, help="Stop every session after its first round.")
@click.option("--scope", type=click.Choice([s.value for s in CoverageScope]), default=None)
@click.option("--format", "fmt", type=click.Choice([f.value for f in ReportFormat]), default=ReportFormat.TABLE.value)
@handle_errors
def generate(project_dir: str, config_file: Optional[str], methods, fmt: str, no_refine: bool, **options) -> None:
    """Run the full pipeline and write tests and reports to the output directory."""
    if methods:
        options["methods"] = list(methods)
        options["focal_filter"] = options.get("focal_filter") or FocalFilter.EXPLICIT.value
    if no_refine:
        options["refine"] = False
    config = RunConfig.load(config_file, project_dir=project_dir, **options)
    report = asyncio.run(run(config))
    click.echo(report_render(report, ReportFormat(fmt)), nl=False)


@cli.command()
@click.argument("run_dir", type=click.Path(file_okay=False))
@click.option("--format", "fmt", type=click.Choice([f.value for f in ReportFormat]), default=ReportFormat.TABLE.value)
@handle_errors
def report(run_dir: str, fmt: str) -> None:
    """Re-render the report of a finished run."""
    click.echo(report_render(load_report(run_dir), ReportFormat(fmt)), nl=False)


@cli.command()
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
def serve(host: Optional[str], port: Optional[int]) -> None:
    """Serve the HTTP API with uvicorn."""
    import uvicorn

    uvicorn.run(
        "app.main:app",
        host=host or settings.HOST,
        port=port or settings.PORT,
        reload=settings.DEBUG,
        log_level="info" if settings.DEBUG else "warning",
    )


if __name__ == "__main__":
    cli()
