import logging
from typing import Dict, List, Optional

from config.settings import settings
from distill.invocation import plan_invocation
from distill.predicates import derive_atoms, intersect_predicates
from distill.resolution import Resolver
from distill.symbolic import replay
from distill.variables import collect_variable_requirements
from knowledge.store import KnowledgeBase
from models.context import DistilledContext, ResolutionStatus
from models.knowledge import Cfg, CfgPath

logger = logging.getLogger(__name__)


def render_obligations(cfg: Cfg, path: CfgPath) -> List[str]:
    nodes = cfg.node_map()
    lines = []
    for obligation in path.obligations:
        node = nodes[obligation.node]
        number = obligation.node.rsplit("/", 1)[1]
        line = f" (line {node.span.line})" if node.span is not None else ""
        lines.append(f"[{number}] {node.label} is {'true' if obligation.outcome else 'false'}{line}")
    return lines


def distill(focal: str, path: CfgPath, kb: KnowledgeBase, depth: Optional[int] = None) -> DistilledContext:
    """The minimal calling context needed to drive ``focal`` down ``path``."""
    depth = depth if depth is not None else settings.RECURSION_DEPTH
    method = kb.facts.method(focal)
    plan = plan_invocation(focal, kb.facts)
    variables = collect_variable_requirements(focal, path, kb)

    # the focal's own guards, with fields symbolic since the test may set them
    subjects: Dict[str, str] = dict(method.params)
    subjects.update({v.field: v.declared_type for v in variables})
    outcome = replay(kb.cfg_of(focal), path, method, kb.facts, fold_constants=False)
    own, _ = derive_atoms(outcome.conditions, subjects)

    calls = Resolver(kb).resolve_calls(method, path, depth, plan.receiver_class, own)
    infeasible = own.empty or calls.unsatisfiable or intersect_predicates([own, calls.predicate]).empty
    if infeasible:
        unsat = [r.callee for r in calls.results if r.status == ResolutionStatus.UNSATISFIABLE]
        logger.info("%s is infeasible (unsatisfiable: %s)", path.id, ", ".join(unsat) or "path conditions")
    return DistilledContext(
        focal=focal,
        path=path,
        invocation=plan,
        variables=variables,
        resolutions=calls.results,
        obligations_rendered=render_obligations(kb.cfg_of(focal), path),
        infeasible=infeasible,
    )
