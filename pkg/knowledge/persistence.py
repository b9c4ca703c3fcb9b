"""JSON graph format for the knowledge base.

Top-level arrays are sorted by id and the document is written with sorted
keys, so two builds of the same project serialize byte-identically.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Union

from pydantic import ValidationError

from knowledge.store import KnowledgeBase
from models.errors import MalformedInputError, NotFoundError, VersionMismatchError
from models.knowledge import (
    EDGE_ORDER, CallEdge, Cfg, CfgEdge, CfgNode, CfgPath, ClassFact, FieldFact, MethodFact,
    PathDependencies, TypeFacts,
)

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def _node_number(node_id: str) -> int:
    return int(node_id.rsplit("/n:", 1)[1])


def kb_to_document(kb: KnowledgeBase) -> Dict[str, Any]:
    cfg_nodes = []
    cfg_edges = []
    for method_id, cfg in kb.cfgs.items():
        for node in cfg.nodes:
            cfg_nodes.append({"method": method_id, **node.model_dump(mode="json")})
        for edge in cfg.edges:
            cfg_edges.append({"method": method_id, **edge.model_dump(mode="json")})
    path_deps = []
    for method_id, paths in kb.paths.items():
        for path in paths:
            deps = kb.dependencies[path.id]
            path_deps.append({"id": path.id, **path.model_dump(mode="json"), **deps.model_dump(mode="json")})
    return {
        "format_version": FORMAT_VERSION,
        "classes": sorted((c.model_dump(mode="json") for c in kb.facts.classes), key=lambda d: d["name"]),
        "methods": sorted((m.model_dump(mode="json") for m in kb.facts.methods), key=lambda d: d["id"]),
        "fields": sorted((f.model_dump(mode="json") for f in kb.facts.fields), key=lambda d: d["id"]),
        "cfg_nodes": sorted(cfg_nodes, key=lambda d: d["id"]),
        "cfg_edges": sorted(cfg_edges, key=lambda d: (d["source"], d["target"], d["label"])),
        "call_edges": sorted((e.model_dump(mode="json") for e in kb.call_edges),
                             key=lambda d: (d["caller"], d["node"])),
        "path_deps": sorted(path_deps, key=lambda d: d["id"]),
        "truncated_paths": sorted(kb.truncated),
    }


def dumps_kb(kb: KnowledgeBase) -> str:
    return json.dumps(kb_to_document(kb), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _by_source(fact) -> tuple:
    return (fact.path, fact.span.key())


def kb_from_document(document: Any) -> KnowledgeBase:
    if not isinstance(document, dict):
        raise MalformedInputError("knowledge base document must be a JSON object")
    if "format_version" not in document:
        raise MalformedInputError("knowledge base document has no format_version")
    version = document["format_version"]
    if version != FORMAT_VERSION:
        raise VersionMismatchError(
            f"knowledge base format version {version!r} is not supported (expected {FORMAT_VERSION})",
            detail={"found": version, "expected": FORMAT_VERSION},
        )
    try:
        facts = TypeFacts(
            classes=sorted((ClassFact.model_validate(c) for c in document["classes"]), key=_by_source),
            methods=sorted((MethodFact.model_validate(m) for m in document["methods"]), key=_by_source),
            fields=sorted((FieldFact.model_validate(f) for f in document["fields"]), key=_by_source),
        )
        nodes: Dict[str, List[CfgNode]] = {}
        for raw in document["cfg_nodes"]:
            raw = dict(raw)
            method_id = raw.pop("method")
            nodes.setdefault(method_id, []).append(CfgNode.model_validate(raw))
        edges: Dict[str, List[CfgEdge]] = {}
        for raw in document["cfg_edges"]:
            raw = dict(raw)
            method_id = raw.pop("method")
            edges.setdefault(method_id, []).append(CfgEdge.model_validate(raw))

        kb = KnowledgeBase(facts=facts)
        for fact in facts.methods:
            if fact.id not in nodes:
                continue
            method_nodes = sorted(nodes[fact.id], key=lambda n: _node_number(n.id))
            method_edges = sorted(
                edges.get(fact.id, []),
                key=lambda e: (_node_number(e.source), EDGE_ORDER[e.label], _node_number(e.target)),
            )
            kb.cfgs[fact.id] = Cfg(method=fact.id, nodes=method_nodes, edges=method_edges)
            kb.paths[fact.id] = []
        for raw in sorted(document["path_deps"], key=lambda d: (d["method"], d["index"])):
            path = CfgPath.model_validate({k: raw[k] for k in ("method", "index", "node_ids", "obligations")})
            kb.paths.setdefault(path.method, []).append(path)
            kb.dependencies[path.id] = PathDependencies.model_validate(
                {"variables": raw["variables"], "calls": raw["calls"]}
            )
        kb.call_edges = [CallEdge.model_validate(e) for e in document["call_edges"]]
        kb.call_edges.sort(key=lambda e: (facts.methods.index(facts.method(e.caller)), _node_number(e.node)))
        kb.truncated = sorted(document.get("truncated_paths", []))
    except (KeyError, TypeError, ValueError, ValidationError, NotFoundError) as exc:
        raise MalformedInputError(f"knowledge base document is malformed: {exc}") from None
    return kb


def loads_kb(text: str) -> KnowledgeBase:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInputError(f"knowledge base is not valid JSON: {exc.msg} at line {exc.lineno}") from None
    return kb_from_document(document)


def save_kb(kb: KnowledgeBase, sink: Union[str, Path]) -> None:
    Path(sink).write_text(dumps_kb(kb), encoding="utf-8")
    logger.info("saved knowledge base to %s", sink)


def load_kb(source: Union[str, Path]) -> KnowledgeBase:
    return loads_kb(Path(source).read_text(encoding="utf-8"))
