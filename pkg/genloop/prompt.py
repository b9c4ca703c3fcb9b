"""Prompt construction.

The full prompt walks the generator through four steps: understand the focal
method and the path, invoke it correctly, set the fields the path reads, and
pick arguments that make every dependent call return what the path needs.
No in-context examples are included.
"""

import logging
from typing import List, Optional

from knowledge.store import KnowledgeBase
from models.context import (
    DistilledContext, InvocationKind, ParamPredicate, ResolutionResult, ResolutionStatus, SetVia,
    VariableRequirement,
)
from models.errors import InfeasibleContextError
from models.session import PromptDocument, PromptVariant, Term
from subjectlang.checker import SemanticModel
from subjectlang.printer import print_field, print_method

logger = logging.getLogger(__name__)

PERSONA = (
    "You are an expert software tester. You write one unit test that drives a focal "
    "method of a small object-oriented language down one specific execution path."
)

TERMINOLOGY = [
    Term(term="focal method", definition="the method under test."),
    Term(term="CFG path", definition="one entry-to-exit walk through the focal method, given as the outcome of every condition on it."),
    Term(term="dependent method", definition="a method whose return value decides a condition on the path."),
    Term(term="dependent variable", definition="a field whose value is read by a condition on the path."),
    Term(term="reflection", definition="`reflect call` and `reflect set`, which reach private methods and fields from outside their class."),
]

RULES = [
    "Do not re-implement or copy the focal method; call it.",
    "Write exactly one class named Test containing `public static void test()` with no parameters.",
    "Use `reflect call` for private methods and `reflect set` for private fields; never access them directly.",
    "Use only the project's classes and the built-ins length, charAt, indexOf, substring and concat.",
    "Answer with the source of the Test class only.",
]

BASIC_COMMAND = [
    "Read the focal method.",
    "Decide how to call it from a test.",
    "Choose arguments and any fields to set.",
    "Write the test class.",
]

RAW_COMMAND = [
    "Read the focal method, the target path and the related code.",
    "Decide how to call the focal method from a test.",
    "Decide which fields the path depends on and how to set them.",
    "Choose arguments that make every condition on the path take the listed outcome.",
]


def focal_source(model: SemanticModel, focal: str) -> str:
    method = model.method(focal)
    return f"class {method.owner} {{\n{print_method(method)}\n}}"


def related_sources(focal: str, kb: KnowledgeBase, model: SemanticModel) -> List[str]:
    """Undistilled source of every direct callee and every field the focal's guards read."""
    out: List[str] = []
    seen = set()
    for edge in kb.call_edges:
        if edge.caller != focal or edge.method_id is None or edge.method_id in seen:
            continue
        seen.add(edge.method_id)
        out.append(f"// {edge.method_id}\n{print_method(model.method(edge.method_id), depth=0)}")
    fields = {}
    for path in kb.paths_of(focal):
        for variable in kb.deps_of(focal, path.index).variables:
            fields.setdefault(variable.field, variable)
    for name in sorted(fields):
        variable = fields[name]
        decl = model.lookup_field(variable.owner, variable.name)
        out.append(f"// {name}\n{print_field(decl, depth=0)}")
    return out


def invocation_step(context: DistilledContext) -> str:
    plan = context.invocation
    owner, _, rest = plan.focal.partition("#")
    name = rest.split("/", 1)[0]
    if plan.kind == InvocationKind.STATIC_DIRECT:
        return f"Invoke the focal method directly as `{owner}.{name}(...)`."
    if plan.kind == InvocationKind.STATIC_REFLECTIVE:
        return f"The focal method is private static: invoke it as `reflect call {owner}#{name}(...)`."
    receiver = plan.receiver_class
    create = f"create the receiver with `{receiver} target = new {receiver}();`"
    if plan.kind == InvocationKind.INSTANCE_REFLECTIVE:
        return f"The focal method is private: {create} and invoke it as `reflect call target.{owner}#{name}(...)`."
    step = f"Invoke it on an instance: {create} and call `target.{name}(...)`."
    if plan.dispatch_target != plan.focal:
        step += f" The call dispatches to {plan.dispatch_target}."
    return step


def _setter(variable: VariableRequirement) -> str:
    if variable.set_via == SetVia.REFLECT:
        receiver = "" if variable.is_static else "target."
        return f"reflect set {receiver}{variable.owner}#{variable.name} = ...;"
    if variable.is_static:
        return f"{variable.owner}.{variable.name} = ...;"
    return f"target.{variable.name} = ...;"


def variables_step(variables: List[VariableRequirement]) -> str:
    if not variables:
        return "There are no variables to set: no condition on the path reads a field."
    parts = []
    for variable in variables:
        scope = "static " if variable.is_static else ""
        text = f"`{variable.field}` ({variable.access.value} {scope}{variable.declared_type}) is read on the path; set it with `{_setter(variable)}`"
        hint = variable.render_hint()
        parts.append(text + (f" so that {hint}." if hint else "."))
    return "Set the dependent variables before the call. " + " ".join(parts)


def _predicate_text(predicate: Optional[ParamPredicate]) -> str:
    if predicate is None or predicate.unconstrained:
        return "any arguments work"
    return "choose arguments with " + " and ".join(predicate.render())


def resolution_line(result: ResolutionResult) -> str:
    call = result.call_text or result.callee
    need = result.required_return.render() if result.required_return is not None else "return the needed value"
    head = f"`{call}` must {need}"
    if result.status == ResolutionStatus.RESOLVED:
        return f"{head}: {_predicate_text(result.predicate)}."
    if result.status == ResolutionStatus.UNSATISFIABLE:
        return f"{head}, which no input achieves."
    known = "" if result.predicate is None or result.predicate.unconstrained else f" known so far: {' and '.join(result.predicate.render())};"
    guards = "; ".join(result.unresolved_guards) or (result.reason or "work out the remaining conditions")
    return f"{head}: derive the arguments yourself;{known} still needed: {guards}."


def constraints_step(resolutions: List[ResolutionResult]) -> str:
    if not resolutions:
        return "No dependent method decides a condition on this path."
    return "Make every dependent method return what the path needs. " + " ".join(
        resolution_line(r) for r in resolutions
    )


def context_rendering(context: DistilledContext, kb: KnowledgeBase) -> List[str]:
    lines = []
    methods = {m.id: m for m in kb.facts.methods}
    for result in context.resolutions:
        fact = methods.get(result.callee)
        if fact is not None:
            scope = " static" if fact.is_static else ""
            lines.append(f"dependent method {result.callee}: {fact.access.value}{scope} {fact.return_type}")
    for variable in context.variables:
        scope = " static" if variable.is_static else ""
        lines.append(f"dependent variable {variable.field}: {variable.access.value}{scope} {variable.declared_type}")
    return lines


def build_prompt(context: DistilledContext, source: str, kb: Optional[KnowledgeBase] = None,
                 variant: PromptVariant = PromptVariant.FULL,
                 related: Optional[List[str]] = None) -> PromptDocument:
    if context.infeasible:
        raise InfeasibleContextError(
            f"{context.path.id} is infeasible; no prompt is built for it", detail={"path": context.path.id},
        )
    if variant == PromptVariant.BASIC:
        return PromptDocument(
            variant=variant, persona=PERSONA, command=BASIC_COMMAND, rules=RULES,
            focal=context.focal, focal_source=source,
        )
    if variant == PromptVariant.RAW_CONTEXT:
        return PromptDocument(
            variant=variant, persona=PERSONA, terminology=TERMINOLOGY, command=RAW_COMMAND, rules=RULES,
            focal=context.focal, focal_source=source, path_obligations=context.obligations_rendered,
            context_rendering=list(related or []),
        )
    command = [
        f"Analyze the focal method {context.focal} and the target path {context.path.id}; "
        f"every condition listed under @path must take the given outcome.",
        invocation_step(context),
        variables_step(context.variables),
        constraints_step(context.resolutions),
    ]
    return PromptDocument(
        variant=variant, persona=PERSONA, terminology=TERMINOLOGY, command=command, rules=RULES,
        focal=context.focal, focal_source=source, path_obligations=context.obligations_rendered,
        context_rendering=context_rendering(context, kb) if kb is not None else [],
    )
