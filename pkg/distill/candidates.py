import logging
from typing import List, Tuple

from distill.predicates import derive_atoms, return_conditions
from distill.symbolic import contains_temp, replay
from knowledge.dataflow import literal_value
from knowledge.store import KnowledgeBase
from models.knowledge import CfgPath, ReturnConstraint

logger = logging.getLogger(__name__)


def candidate_paths_for_return(callee: str, rc: ReturnConstraint, kb: KnowledgeBase) -> List[CfgPath]:
    """Paths of ``callee`` whose return can satisfy ``rc``.

    Constant returns are checked exactly. Expression returns are kept unless
    the return obligation alone is contradictory.
    """
    method = kb.facts.method(callee)
    cfg = kb.cfg_of(callee)
    subjects = dict(method.params)
    kept: List[CfgPath] = []
    for path in kb.paths_of(callee):
        outcome = replay(cfg, path, method, kb.facts)
        if not outcome.returns_value:
            continue
        is_const, value = literal_value(outcome.returned)
        if is_const:
            if rc.holds(value):
                kept.append(path)
            continue
        if contains_temp(outcome.returned):
            kept.append(path)
            continue
        predicate, _ = derive_atoms(return_conditions(outcome.returned, rc, method.return_type), subjects)
        if not predicate.empty:
            kept.append(path)
    logger.debug("%s: %d of %d path(s) can %s", callee, len(kept), len(kb.paths_of(callee)), rc.render())
    return kept


def rank_key(path: CfgPath, kb: KnowledgeBase) -> Tuple[int, int, int]:
    deps = kb.deps_of(path.method, path.index)
    return len({call.callee for call in deps.calls}), len(deps.variables), len(path.node_ids)


def rank_paths(candidates: List[CfgPath], kb: KnowledgeBase) -> List[CfgPath]:
    """Simplest first: fewest dependent methods, then variables, then nodes."""
    return sorted(candidates, key=lambda path: rank_key(path, kb))
