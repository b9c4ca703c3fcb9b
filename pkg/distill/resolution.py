"""Dependent-method constraint resolution.

For every user call whose result steers the path, pick the simplest path of
the callee that produces the required return, derive the parameter predicate
that drives it there, and recurse into that path's own dependent calls.
Repeated calls to one callee with the same arguments share a single
intersected predicate. Child predicates are carried back into the caller's
parameters through the call arguments.
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from config.settings import settings
from distill.candidates import candidate_paths_for_return, rank_paths
from distill.predicates import (
    EMPTY, conjoin, derive_param_predicate, intersect_predicates, shift_int,
)
from distill.symbolic import PathCall, replay
from knowledge.dataflow import literal_value
from knowledge.store import KnowledgeBase
from models.context import ParamPredicate, ResolutionResult, ResolutionStatus, Unresolved
from models.knowledge import CfgPath, DependentCall, MethodFact
from models.syntax import Binary, Var
from subjectlang.printer import print_expr

logger = logging.getLogger(__name__)

PRODUCT_CAP = 64


@dataclass
class PathResolution:
    """Resolutions of every dependent call on one path, lifted to the path's parameters."""

    results: List[ResolutionResult] = field(default_factory=list)
    predicate: ParamPredicate = field(default_factory=ParamPredicate)
    guards: List[str] = field(default_factory=list)

    @property
    def unsatisfiable(self) -> bool:
        return self.predicate.empty or any(r.status == ResolutionStatus.UNSATISFIABLE for r in self.results)

    @property
    def resolved(self) -> bool:
        return not self.guards and all(r.status == ResolutionStatus.RESOLVED for r in self.results)


def _var_offset(arg) -> Optional[Tuple[str, int]]:
    if isinstance(arg, Var):
        return arg.name, 0
    if isinstance(arg, Binary) and arg.op in ("+", "-"):
        is_const, value = literal_value(arg.right)
        if isinstance(arg.left, Var) and is_const and isinstance(value, int) and not isinstance(value, bool):
            return arg.left.name, value if arg.op == "+" else -value
        is_const, value = literal_value(arg.left)
        if arg.op == "+" and isinstance(arg.right, Var) and is_const and isinstance(value, int) \
                and not isinstance(value, bool):
            return arg.right.name, value
    return None


def translate_predicate(predicate: ParamPredicate, callee: MethodFact, args: List) -> Tuple[ParamPredicate, List[str]]:
    """Carry a predicate over ``callee``'s parameters back through the call arguments."""
    out = ParamPredicate()
    guards: List[str] = []
    for name, atom in predicate.atoms.items():
        arg = args[callee.param_names.index(name)]
        is_const, value = literal_value(arg)
        if is_const:
            if not atom.holds(value):
                return EMPTY, []
            continue
        var = _var_offset(arg)
        if var is not None and (var[1] == 0 or atom.kind == "int"):
            target, offset = var
            out = conjoin(out, target, shift_int(atom, offset) if offset else atom)
            if out.empty:
                return EMPTY, []
            continue
        guards.append(f"{print_expr(arg)} must satisfy {' and '.join(atom.render(name))}")
    return out, guards


class Resolver:
    def __init__(self, kb: KnowledgeBase):
        self.kb = kb
        self._candidates: Dict[Tuple[str, str], List[CfgPath]] = {}

    # -- callee lookup -----------------------------------------------------

    def callee_of(self, call: DependentCall, receiver_class: Optional[str]) -> Tuple[Optional[MethodFact], Optional[str]]:
        """The method the call lands on and the runtime class of its receiver."""
        facts = self.kb.facts
        if call.dispatch == "static":
            return facts.method(call.method_id), None
        if call.receiver_is_this and receiver_class is not None:
            runtime = receiver_class
        else:
            base = call.receiver_type or call.owner
            concrete = sorted(facts.concrete_classes_under(base), key=lambda c: (facts.distance(c, base), c))
            if not concrete:
                return None, None
            runtime = concrete[0]
        if call.dispatch == "special":
            return facts.method(call.method_id), runtime
        return self.kb.dispatch(runtime, call.callee), runtime

    def ranked(self, callee: str, call: DependentCall) -> List[CfgPath]:
        key = (callee, call.required_return.model_dump_json())
        if key not in self._candidates:
            candidates = candidate_paths_for_return(callee, call.required_return, self.kb)
            self._candidates[key] = rank_paths(candidates, self.kb) if candidates else []
        return self._candidates[key]

    # -- resolution --------------------------------------------------------

    def resolve_calls(self, method: MethodFact, path: CfgPath, depth: int,
                      receiver_class: Optional[str], outer: Optional[ParamPredicate] = None) -> PathResolution:
        """Resolve every dependent call on ``path`` of ``method`` with the given budget.

        ``outer`` holds what is already known about ``method``'s parameters on
        this path; callee paths contradicting it are passed over.
        """
        deps = self.kb.deps_of(method.id, path.index)
        if not deps.calls:
            return PathResolution()
        outcome = replay(self.kb.cfg_of(method.id), path, method, self.kb.facts)
        sites: Dict[str, PathCall] = {pc.node: pc for pc in outcome.calls.values()}

        groups: Dict[Tuple[str, ...], List[DependentCall]] = {}
        for call in deps.calls:
            site = sites[call.node]
            groups.setdefault((call.callee, *(print_expr(a) for a in site.args)), []).append(call)

        by_node: Dict[str, ResolutionResult] = {}
        known = outer or ParamPredicate()
        lifted: List[ParamPredicate] = []
        guards: List[str] = []
        for calls in groups.values():
            site = sites[calls[0].node]
            results = self.resolve_group(calls, depth, receiver_class, site.args, known)
            for call, result in zip(calls, results):
                result.call_text = f"{site.site.name}({', '.join(print_expr(a) for a in sites[call.node].args)})"
                by_node[call.node] = result
            head = results[0]
            if head.predicate is not None and head.predicate.atoms:
                predicate, extra = translate_predicate(head.predicate, self.kb.facts.method(head.callee), site.args)
                lifted.append(predicate)
                guards.extend(extra)
                known = intersect_predicates([known, predicate])
        return PathResolution(
            results=[by_node[call.node] for call in deps.calls],
            predicate=intersect_predicates(lifted),
            guards=guards,
        )

    def resolve_group(self, calls: List[DependentCall], depth: int, receiver_class: Optional[str],
                      args: Optional[List] = None, outer: Optional[ParamPredicate] = None) -> List[ResolutionResult]:
        """Resolve calls sharing one callee and one argument list; results align with ``calls``.

        With ``args`` and ``outer`` given, a choice whose predicate, carried
        back through ``args``, contradicts ``outer`` is rejected.
        """
        callee, runtime = self.callee_of(calls[0], receiver_class)
        callee_ref = callee.id if callee is not None else calls[0].callee

        def verdict(status: ResolutionStatus, reason: str) -> List[ResolutionResult]:
            return [
                ResolutionResult(callee=callee_ref, call_node=c.node, required_return=c.required_return,
                                 status=status, reason=reason)
                for c in calls
            ]

        if callee is None:
            return verdict(ResolutionStatus.UNRESOLVED, f"no concrete implementation of {calls[0].callee}")
        if depth < 0:
            return verdict(ResolutionStatus.UNRESOLVED, "recursion depth exhausted")
        if callee.is_abstract:
            return verdict(ResolutionStatus.UNRESOLVED, f"{callee.id} has no body")
        if any(c.required_return is None for c in calls):
            return verdict(ResolutionStatus.UNRESOLVED, "the path's use of the return value is outside the supported shapes")

        ranked = [self.ranked(callee.id, c) for c in calls]
        for call, paths in zip(calls, ranked):
            if not paths:
                return verdict(ResolutionStatus.UNSATISFIABLE, f"no path of {callee.id} {call.required_return.render()}")

        combos = itertools.product(*ranked)
        if len(calls) > 1:
            combos = itertools.islice(combos, PRODUCT_CAP)
        fallback: Optional[List[ResolutionResult]] = None
        for combo in combos:
            attempt = self._attempt(callee, calls, combo, depth, runtime)
            if attempt is None or self._contradicts(attempt[0].predicate, callee, args, outer):
                continue
            if all(r.status == ResolutionStatus.RESOLVED for r in attempt):
                return attempt
            if fallback is None:
                fallback = attempt
        if fallback is not None:
            return fallback
        return verdict(
            ResolutionStatus.UNSATISFIABLE,
            f"every candidate path of {callee.id} contradicts the required return or its own dependent calls",
        )

    @staticmethod
    def _contradicts(predicate: Optional[ParamPredicate], callee: MethodFact, args: Optional[List],
                     outer: Optional[ParamPredicate]) -> bool:
        if outer is None or args is None or predicate is None or not predicate.atoms:
            return False
        lifted, _ = translate_predicate(predicate, callee, args)
        return intersect_predicates([outer, lifted]).empty

    def _attempt(self, callee: MethodFact, calls: List[DependentCall], combo: Tuple[CfgPath, ...],
                 depth: int, runtime: Optional[str]) -> Optional[List[ResolutionResult]]:
        own: List[ParamPredicate] = []
        own_guards: List[List[str]] = []
        for call, path in zip(calls, combo):
            derived = derive_param_predicate(callee.id, path, call.required_return, self.kb)
            if isinstance(derived, Unresolved):
                own.append(derived.partial)
                own_guards.append(derived.guards)
            else:
                own.append(derived)
                own_guards.append([])
        shared = intersect_predicates(own)
        if shared.empty:
            return None

        nested: List[PathResolution] = []
        for path in combo:
            below = self.resolve_calls(callee, path, depth - 1, runtime, shared)
            if below.unsatisfiable:
                return None
            nested.append(below)
        predicate = intersect_predicates(own + [below.predicate for below in nested])
        if predicate.empty:
            return None

        results = []
        for call, path, guards, below in zip(calls, combo, own_guards, nested):
            resolved = not guards and below.resolved
            results.append(ResolutionResult(
                callee=callee.id, call_node=call.node, required_return=call.required_return,
                chosen_path=path, predicate=predicate, unresolved_guards=guards + below.guards,
                children=below.results,
                status=ResolutionStatus.RESOLVED if resolved else ResolutionStatus.UNRESOLVED,
                reason=None if resolved else "some constraints are left to the generator",
            ))
        return results


def resolve_dependent_method(call: DependentCall, kb: KnowledgeBase, depth: Optional[int] = None,
                             receiver_class: Optional[str] = None) -> ResolutionResult:
    depth = depth if depth is not None else settings.RECURSION_DEPTH
    return Resolver(kb).resolve_group([call], depth, receiver_class)[0]
