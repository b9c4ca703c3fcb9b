import logging
from typing import List, Optional

from config.settings import settings
from models.session import ValidationKind, ValidationOutcome
from models.syntax import Access, Diagnostic, SourceUnit, Span
from subjectlang.checker import analyze
from subjectlang.interpreter import execute
from subjectlang.parser import parse_or_diagnostics

logger = logging.getLogger(__name__)

TEST_PATH = "Test.sj"
TEST_ENTRY = "Test#test/()"


def _missing_entry(message: str, span: Optional[Span] = None) -> ValidationOutcome:
    return ValidationOutcome(
        kind=ValidationKind.COMPILE_ERROR,
        diagnostics=[Diagnostic(span=span or Span(), code="MISSING_ENTRY", message=message, path=TEST_PATH)],
    )


def validate(candidate: str, project: List[SourceUnit], focal: str,
             step_budget: Optional[int] = None) -> ValidationOutcome:
    """Compile the candidate against the project, then run ``Test.test``.

    Valid means it compiles and the focal method is entered before any
    uncaught exception; a later exception is logged but does not count.
    """
    unit, errors = parse_or_diagnostics(candidate, TEST_PATH)
    if unit is None:
        return ValidationOutcome(kind=ValidationKind.COMPILE_ERROR, diagnostics=errors)
    model = analyze(project + [unit])
    if not model.ok:
        return ValidationOutcome(kind=ValidationKind.COMPILE_ERROR, diagnostics=model.diagnostics)

    entry = model.methods.get(TEST_ENTRY)
    if entry is None or entry.owner != "Test":
        return _missing_entry("the test must declare class Test with `public static void test()`")
    if not entry.is_static or entry.access != Access.PUBLIC or entry.return_type != "void":
        return _missing_entry("Test.test must be public static void", entry.span)

    trace = execute(model, TEST_ENTRY, focal, step_budget=step_budget or settings.STEP_BUDGET)
    if not trace.focal_reached:
        return ValidationOutcome(kind=ValidationKind.EXCEPTION_BEFORE_FOCAL, trace=trace)
    if trace.exception is not None:
        logger.warning("%s: %s after entering %s", trace.exception.exception_kind, trace.exception.message, focal)
    return ValidationOutcome(kind=ValidationKind.VALID, trace=trace)
