"""Deterministic generator backend that searches fixed value domains.

For each focal method every argument tuple (and every value of the fields its
guards read) is executed once inside the interpreter; the branch outcomes of
the focal frame become a signature mapped to the first input producing it.
The same scan serves as the exhaustive oracle of reachable branch outcomes.
"""

import asyncio
import itertools
import logging
import threading
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, NamedTuple, Optional, Sequence, Set, Tuple

from pydantic import BaseModel, Field

from config.settings import settings
from distill.invocation import plan_invocation
from knowledge.store import KnowledgeBase
from models.context import DistilledContext, InvocationKind, InvocationPlan
from models.errors import BackendFailure
from models.knowledge import CfgPath, FieldFact
from models.session import BackendCapability, GenerationRequest
from models.syntax import LITERALS, PRIMITIVE_TYPES, TYPE_DEFAULTS, Access, CharLit, IntLit, StringLit
from subjectlang.checker import SemanticModel
from subjectlang.coverage import outcome_id
from subjectlang.interpreter import Interpreter, run_guarded
from subjectlang.printer import format_value

logger = logging.getLogger(__name__)

ALPHABET = "AEIOUYBCX"
Signature = Tuple[Tuple[str, bool], ...]


def default_ints(bound: int = 8) -> List[int]:
    out = [0]
    for k in range(1, bound + 1):
        out.extend([k, -k])
    return out


def strings_over(alphabet: str, max_length: int) -> List[str]:
    out: List[str] = []
    for length in range(max_length + 1):
        out.extend("".join(chars) for chars in itertools.product(alphabet, repeat=length))
    return out


class Domains(BaseModel):
    """Value domains in enumeration order."""

    ints: List[int] = Field(default_factory=default_ints)
    bools: List[bool] = Field(default_factory=lambda: [False, True])
    chars: str = ALPHABET
    strings: List[str] = Field(default_factory=lambda: strings_over(ALPHABET, 3))

    @classmethod
    def small(cls, alphabet: str = "ACX", max_length: int = 2, bound: int = 3) -> "Domains":
        return cls(ints=default_ints(bound), chars=alphabet, strings=strings_over(alphabet, max_length))

    def with_constants(self, model: SemanticModel) -> "Domains":
        """Extend with every literal appearing in the project."""
        ints, chars, strings = list(self.ints), self.chars, list(self.strings)
        for literal in project_literals(model):
            if isinstance(literal, IntLit) and literal.value not in ints:
                ints.append(literal.value)
            elif isinstance(literal, CharLit) and literal.value not in chars:
                chars += literal.value
            elif isinstance(literal, StringLit) and literal.value not in strings:
                strings.append(literal.value)
        return Domains(ints=ints, bools=self.bools, chars=chars, strings=strings)


def _literals(node: Any) -> Iterable:
    if isinstance(node, LITERALS):
        yield node
    elif isinstance(node, BaseModel):
        for name in type(node).model_fields:
            yield from _literals(getattr(node, name))
    elif isinstance(node, list):
        for item in node:
            yield from _literals(item)


def project_literals(model: SemanticModel) -> List:
    return list(_literals(model.units))


class NewInstance(NamedTuple):
    class_name: str


@dataclass
class FocalScan:
    """Every distinct focal-frame branch signature and the first input reaching it."""

    focal: str
    plan: InvocationPlan
    param_types: List[str]
    fields: List[FieldFact]
    signatures: Dict[Signature, Tuple[Tuple, Tuple]] = field(default_factory=dict)
    runs: int = 0
    completed: int = 0

    def outcomes(self) -> Set[str]:
        return {outcome_id(branch, value) for sig in self.signatures for branch, value in sig}


class BruteForceSearch:
    """Per-focal scans over the domains, computed once and cached."""

    def __init__(self, model: SemanticModel, kb: KnowledgeBase, domains: Optional[Domains] = None,
                 step_budget: Optional[int] = None, max_runs: int = 200_000):
        self.model = model
        self.kb = kb
        self.domains = (domains or Domains()).with_constants(model)
        self.step_budget = step_budget or settings.STEP_BUDGET
        self.max_runs = max_runs
        self._scans: Dict[str, FocalScan] = {}
        self._lock = threading.Lock()

    def domain_of(self, type_name: str) -> Sequence:
        if type_name == "int":
            return self.domains.ints
        if type_name == "bool":
            return self.domains.bools
        if type_name == "char":
            return list(self.domains.chars)
        if type_name == "string":
            return self.domains.strings
        return [None] + [NewInstance(name) for name in self.kb.facts.concrete_classes_under(type_name)]

    def field_domain(self, fact: FieldFact) -> List:
        initial = fact.initializer if fact.has_initializer else TYPE_DEFAULTS[fact.declared_type]
        return [initial] + [v for v in self.domain_of(fact.declared_type) if v != initial]

    def settable_fields(self, focal: str, plan: InvocationPlan) -> List[FieldFact]:
        seen: Dict[str, FieldFact] = {}
        for path in self.kb.paths_of(focal):
            for variable in self.kb.deps_of(focal, path.index).variables:
                if variable.declared_type not in PRIMITIVE_TYPES:
                    continue
                if not variable.is_static and plan.receiver_class is None:
                    continue
                fact = self.kb.facts.field(variable.owner, variable.name)
                if not fact.is_constant:
                    seen.setdefault(variable.field, fact)
        return [seen[name] for name in sorted(seen)]

    def scan(self, focal: str) -> FocalScan:
        with self._lock:
            if focal not in self._scans:
                self._scans[focal] = self._scan(focal)
            return self._scans[focal]

    def _scan(self, focal: str) -> FocalScan:
        fact = self.kb.facts.method(focal)
        plan = plan_invocation(focal, self.kb.facts)
        fields = self.settable_fields(focal, plan)
        result = FocalScan(focal=focal, plan=plan, param_types=list(fact.param_types), fields=fields)
        target = self.model.method(plan.dispatch_target)
        decls = [self.model.lookup_field(f.owner, f.name) for f in fields]
        arg_domains = [self.domain_of(t) for t in fact.param_types]
        field_domains = [self.field_domain(f) for f in fields]

        combos = itertools.product(*arg_domains, *field_domains)
        for combo in itertools.islice(combos, self.max_runs):
            args, values = combo[:len(arg_domains)], combo[len(arg_domains):]
            result.runs += 1
            interpreter = Interpreter(self.model, step_budget=self.step_budget, record_statements=False)
            receiver = interpreter.new_object(plan.receiver_class) if plan.receiver_class else None
            for decl, value in zip(decls, values):
                interpreter.set_field(decl, value, receiver)
            actual = [interpreter.new_object(a.class_name) if isinstance(a, NewInstance) else a for a in args]
            _, fault = run_guarded(interpreter, target, receiver, actual)
            if fault is not None:
                continue
            frame = interpreter.first_frame_of(focal)
            if frame is None:
                continue
            result.completed += 1
            result.signatures.setdefault(tuple(interpreter.branch_events(frame)), (args, values))
        if result.runs == self.max_runs:
            logger.warning("scan of %s stopped after %d run(s)", focal, self.max_runs)
        logger.info("scanned %s: %d run(s), %d signature(s)", focal, result.runs, len(result.signatures))
        return result

    def path_signature(self, path: CfgPath) -> Signature:
        nodes = self.kb.cfg_of(path.method).node_map()
        return tuple((nodes[ob.node].branch, ob.outcome) for ob in path.obligations)

    def find_input(self, focal: str, path: CfgPath) -> Optional[Tuple[Tuple, Tuple]]:
        return self.scan(focal).signatures.get(self.path_signature(path))

    def reachable_outcomes(self, focal: str) -> Set[str]:
        return self.scan(focal).outcomes()


def render_test(focal: str, plan: InvocationPlan, param_types: List[str],
                fields: List[FieldFact], args: Tuple, values: Tuple) -> str:
    """Source of a Test class that sets the fields, then calls the focal method once."""
    owner, _, rest = focal.partition("#")
    name = rest.split("/", 1)[0]
    body: List[str] = []
    if plan.receiver_class is not None:
        body.append(f"{plan.receiver_class} target = new {plan.receiver_class}();")
    for fact, value in zip(fields, values):
        literal = format_value(value, fact.declared_type)
        if fact.access == Access.PRIVATE:
            receiver = "" if fact.is_static else "target."
            body.append(f"reflect set {receiver}{fact.owner}#{fact.name} = {literal};")
        elif fact.is_static:
            body.append(f"{fact.owner}.{fact.name} = {literal};")
        else:
            body.append(f"target.{fact.name} = {literal};")
    rendered: List[str] = []
    for index, (type_name, value) in enumerate(zip(param_types, args)):
        if type_name in PRIMITIVE_TYPES:
            rendered.append(format_value(value, type_name))
            continue
        local = f"arg{index}"
        init = f" = new {value.class_name}()" if isinstance(value, NewInstance) else ""
        body.append(f"{type_name} {local}{init};")
        rendered.append(local)
    arg_text = ", ".join(rendered)
    if plan.kind == InvocationKind.STATIC_DIRECT:
        body.append(f"{owner}.{name}({arg_text});")
    elif plan.kind == InvocationKind.STATIC_REFLECTIVE:
        body.append(f"reflect call {owner}#{name}({arg_text});")
    elif plan.kind == InvocationKind.INSTANCE_REFLECTIVE:
        body.append(f"reflect call target.{owner}#{name}({arg_text});")
    else:
        body.append(f"target.{name}({arg_text});")
    lines = ["class Test {", "    public static void test() {"]
    lines.extend(f"        {line}" for line in body)
    lines.extend(["    }", "}"])
    return "\n".join(lines) + "\n"


def brute_force_generate(context: DistilledContext, search: BruteForceSearch) -> Optional[str]:
    """A test driving the focal method down the context's path, or None when no input does."""
    scan = search.scan(context.focal)
    found = search.find_input(context.focal, context.path)
    if found is None:
        return None
    args, values = found
    return render_test(context.focal, scan.plan, scan.param_types, scan.fields, args, values)


class BruteForceBackend:
    capability = BackendCapability(name="brute-force", deterministic=True)

    def __init__(self, search: BruteForceSearch):
        self.search = search

    async def produce(self, request: GenerationRequest) -> str:
        source = await asyncio.to_thread(brute_force_generate, request.context, self.search)
        if source is None:
            raise BackendFailure(
                f"no input in the domains follows {request.context.path.id}",
                detail={"path": request.context.path.id},
            )
        return source
