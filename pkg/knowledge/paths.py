import logging
from typing import Dict, Iterator, List, Optional

from config.settings import settings
from models.knowledge import Cfg, CfgEdge, CfgPath, EdgeLabel, NodeKind, Obligation, PathEnumeration

logger = logging.getLogger(__name__)


def enumerate_paths(cfg: Cfg, cap: Optional[int] = None) -> PathEnumeration:
    """Entry-to-exit walks in DFS order, true-edge before false-edge.

    An edge leading to a node already on the current walk is skipped, so each
    loop body contributes at most one iteration per path. Walks that dead-end
    before the exit are dropped.
    """
    cap = cap if cap is not None else settings.PATH_CAP
    successors: Dict[str, List[CfgEdge]] = {node.id: cfg.successors(node.id) for node in cfg.nodes}
    kinds = {node.id: node.kind for node in cfg.nodes}
    exit_id = cfg.exit

    result = PathEnumeration()
    walk: List[str] = [cfg.entry]
    pushed: List[bool] = [False]
    obligations: List[Obligation] = []
    on_walk = {cfg.entry}
    stack: List[Iterator[CfgEdge]] = [iter(successors[cfg.entry])]

    while stack:
        edge = next(stack[-1], None)
        if edge is None:
            stack.pop()
            on_walk.discard(walk.pop())
            if pushed.pop():
                obligations.pop()
            continue
        if edge.target in on_walk:
            continue
        branching = kinds[edge.source] == NodeKind.BRANCH and edge.label != EdgeLabel.SEQ
        if edge.target == exit_id:
            if len(result.paths) == cap:
                result.truncated = True
                break
            final = list(obligations)
            if branching:
                final.append(Obligation(node=edge.source, outcome=edge.label == EdgeLabel.TRUE))
            result.paths.append(CfgPath(
                method=cfg.method, index=len(result.paths), node_ids=walk + [exit_id], obligations=final,
            ))
            continue
        walk.append(edge.target)
        on_walk.add(edge.target)
        pushed.append(branching)
        if branching:
            obligations.append(Obligation(node=edge.source, outcome=edge.label == EdgeLabel.TRUE))
        stack.append(iter(successors[edge.target]))

    if result.truncated:
        logger.warning("path enumeration for %s stopped at the cap of %d", cfg.method, cap)
    return result
