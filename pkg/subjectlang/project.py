"""Loading a project: a directory of ``.sj`` files, or an in-memory path->source map."""

import logging
from pathlib import Path
from typing import Dict, List, Mapping

from models.errors import MalformedInputError, ProjectCompileError
from models.syntax import Diagnostic, SourceUnit
from subjectlang.checker import SemanticModel, analyze
from subjectlang.parser import parse_or_diagnostics

logger = logging.getLogger(__name__)

SOURCE_SUFFIX = ".sj"


def read_sources(project_dir: str) -> Dict[str, str]:
    root = Path(project_dir)
    if not root.is_dir():
        raise MalformedInputError(f"project directory {project_dir} does not exist",
                                  detail={"project_dir": project_dir})
    sources: Dict[str, str] = {}
    for file in sorted(root.rglob(f"*{SOURCE_SUFFIX}")):
        sources[file.relative_to(root).as_posix()] = file.read_text(encoding="utf-8")
    return sources


def parse_sources(sources: Mapping[str, str]) -> List[SourceUnit]:
    """Parse every file; raises ProjectCompileError carrying all syntax diagnostics."""
    units: List[SourceUnit] = []
    diagnostics: List[Diagnostic] = []
    for path in sorted(sources):
        unit, errors = parse_or_diagnostics(sources[path], path)
        if unit is None:
            diagnostics.extend(errors)
        else:
            units.append(unit)
    if diagnostics:
        raise ProjectCompileError(sorted(diagnostics, key=Diagnostic.sort_key))
    return units


def compile_sources(sources: Mapping[str, str]) -> SemanticModel:
    model = analyze(parse_sources(sources))
    if not model.ok:
        raise ProjectCompileError(model.diagnostics)
    logger.info("compiled %d file(s): %d class(es), %d method(s)",
                len(sources), len(model.classes), len(model.methods))
    return model


def load_project(project_dir: str) -> SemanticModel:
    return compile_sources(read_sources(project_dir))
