import logging
from typing import Dict, List

from distill.predicates import derive_atoms
from distill.symbolic import replay
from knowledge.store import KnowledgeBase
from models.context import SetVia, VariableRequirement
from models.knowledge import CfgPath
from models.syntax import Access

logger = logging.getLogger(__name__)


def collect_variable_requirements(focal: str, path: CfgPath, kb: KnowledgeBase) -> List[VariableRequirement]:
    """One requirement per field a guard on ``path`` reads.

    A hint is attached when the path's guards constrain the field on its own,
    e.g. ``enabled`` on a true-edge or ``LIMIT > 3``.
    """
    deps = kb.deps_of(focal, path.index)
    if not deps.variables:
        return []
    subjects: Dict[str, str] = {v.field: v.declared_type for v in deps.variables}
    outcome = replay(kb.cfg_of(focal), path, kb.facts.method(focal), kb.facts, fold_constants=False)
    hints, _ = derive_atoms(outcome.conditions, subjects)

    requirements = []
    for variable in deps.variables:
        hint = None if hints.empty else hints.atoms.get(variable.field)
        requirements.append(VariableRequirement(
            field=variable.field, owner=variable.owner, name=variable.name,
            declared_type=variable.declared_type, access=variable.access, is_static=variable.is_static,
            set_via=SetVia.REFLECT if variable.access == Access.PRIVATE else SetVia.DIRECT,
            required_value_hint=hint,
        ))
    return requirements
