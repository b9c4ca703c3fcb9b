import logging
from enum import Enum
from typing import List, Optional, Sequence

from knowledge.store import KnowledgeBase

logger = logging.getLogger(__name__)


class FocalFilter(str, Enum):
    ALL = "all"
    BRANCHING_AND_DEPENDENT = "branching-and-dependent"
    EXPLICIT = "explicit"


def has_branch(kb: KnowledgeBase, method_id: str) -> bool:
    return bool(kb.cfg_of(method_id).branch_nodes())


def has_dependencies(kb: KnowledgeBase, method_id: str) -> bool:
    for path in kb.paths_of(method_id):
        deps = kb.deps_of(method_id, path.index)
        if deps.variables or deps.calls:
            return True
    return False


def select_focals(kb: KnowledgeBase, focal_filter: FocalFilter = FocalFilter.BRANCHING_AND_DEPENDENT,
                  methods: Optional[Sequence[str]] = None) -> List[str]:
    """Focal method ids in source order; an explicit list keeps its own order."""
    if focal_filter == FocalFilter.EXPLICIT:
        return list(dict.fromkeys(kb.method_of(ref).id for ref in methods or []))
    concrete = [fact.id for fact in kb.facts.methods if not fact.is_abstract]
    if focal_filter == FocalFilter.ALL:
        return concrete
    selected = [m for m in concrete if has_branch(kb, m) and has_dependencies(kb, m)]
    logger.info("selected %d of %d concrete method(s)", len(selected), len(concrete))
    return selected
