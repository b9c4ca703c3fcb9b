"""The knowledge base: type facts, CFGs, paths, call edges and per-path dependencies."""

import logging
from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from config.settings import settings
from knowledge.cfg import build_cfg
from knowledge.dataflow import collect_dependencies
from knowledge.facts import extract_type_facts
from knowledge.paths import enumerate_paths
from models.errors import NotFoundError, NoSuchMethodError
from models.knowledge import (
    CallEdge, Cfg, CfgPath, MethodFact, NodeKind, PathDependencies, TypeFacts, path_id,
)
from subjectlang.checker import SemanticModel
from subjectlang.dispatch import resolve_dispatch

logger = logging.getLogger(__name__)


class KnowledgeBase(BaseModel):
    facts: TypeFacts = Field(default_factory=TypeFacts)
    cfgs: Dict[str, Cfg] = Field(default_factory=dict)
    paths: Dict[str, List[CfgPath]] = Field(default_factory=dict)
    truncated: List[str] = Field(default_factory=list)
    call_edges: List[CallEdge] = Field(default_factory=list)
    dependencies: Dict[str, PathDependencies] = Field(default_factory=dict)

    # -- queries -----------------------------------------------------------

    def method_of(self, ref: str) -> MethodFact:
        """Look a method up by id (``C#m/(int)``), ``C.m``/``C#m`` or bare signature ``m(int)``."""
        for fact in self.facts.methods:
            if fact.id == ref:
                return fact
        if "#" in ref or "." in ref:
            owner, _, name = ref.replace("#", ".").partition(".")
            found = [f for f in self.facts.methods if f.owner == owner and (f.name == name or f.signature == name)]
        else:
            found = [f for f in self.facts.methods if f.signature == ref or f.name == ref]
        if len(found) == 1:
            return found[0]
        reason = "is ambiguous" if found else "not found"
        raise NotFoundError(f"method {ref} {reason}", detail={"method": ref, "matches": [f.id for f in found]})

    def cfg_of(self, method_id: str) -> Cfg:
        if method_id not in self.cfgs:
            raise NotFoundError(f"no cfg for {method_id}", detail={"method": method_id})
        return self.cfgs[method_id]

    def paths_of(self, method_id: str) -> List[CfgPath]:
        if method_id not in self.paths:
            raise NotFoundError(f"no paths for {method_id}", detail={"method": method_id})
        return self.paths[method_id]

    def path(self, method_id: str, index: int) -> CfgPath:
        paths = self.paths_of(method_id)
        if not 0 <= index < len(paths):
            raise NotFoundError(f"{method_id} has no path {index}", detail={"method": method_id, "path": index})
        return paths[index]

    def deps_of(self, method_id: str, index: int) -> PathDependencies:
        key = path_id(method_id, index)
        if key not in self.dependencies:
            raise NotFoundError(f"no dependencies for {key}", detail={"path": key})
        return self.dependencies[key]

    def callees_of(self, method_id: str) -> List[str]:
        self.facts.method(method_id)
        return sorted({edge.callee for edge in self.call_edges if edge.caller == method_id})

    def callers_of(self, method_id: str) -> List[str]:
        target = self.facts.method(method_id)
        callers = set()
        for edge in self.call_edges:
            if edge.callee != target.signature:
                continue
            if edge.dispatch == "virtual":
                if any(self.dispatch(cls, edge.callee) == target for cls in
                       self.facts.concrete_classes_under(edge.receiver_type or edge.owner)):
                    callers.add(edge.caller)
            elif edge.method_id == target.id:
                callers.add(edge.caller)
        return sorted(callers)

    def dispatch(self, runtime_class: str, signature: str) -> Optional[MethodFact]:
        try:
            return resolve_dispatch(runtime_class, signature, self.facts)
        except NoSuchMethodError:
            return None

    def is_truncated(self, method_id: str) -> bool:
        return method_id in self.truncated


def build_call_edges(cfg: Cfg) -> List[CallEdge]:
    return [
        CallEdge(
            caller=cfg.method, node=node.id, callee=node.call.callee, name=node.call.name,
            dispatch=node.call.dispatch, owner=node.call.owner, method_id=node.call.method_id,
            receiver_type=node.call.receiver_type,
        )
        for node in cfg.nodes if node.kind == NodeKind.CALL
    ]


def build_kb(model: SemanticModel, path_cap: Optional[int] = None) -> KnowledgeBase:
    """Build every CFG, path set and dependency record for a checked project."""
    kb = KnowledgeBase(facts=extract_type_facts(model))
    for fact in kb.facts.methods:
        if fact.is_abstract:
            continue
        cfg = build_cfg(model.methods[fact.id], model)
        enumeration = enumerate_paths(cfg, path_cap if path_cap is not None else settings.PATH_CAP)
        kb.cfgs[fact.id] = cfg
        kb.paths[fact.id] = enumeration.paths
        if enumeration.truncated:
            kb.truncated.append(fact.id)
        kb.call_edges.extend(build_call_edges(cfg))
        for path in enumeration.paths:
            kb.dependencies[path.id] = collect_dependencies(cfg, path, kb.facts)
    kb.truncated.sort()
    logger.info(
        "knowledge base: %d class(es), %d method(s), %d path(s), %d call edge(s)",
        len(kb.facts.classes), len(kb.facts.methods), len(kb.dependencies), len(kb.call_edges),
    )
    return kb
