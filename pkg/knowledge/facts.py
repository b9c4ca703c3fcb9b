import logging
from typing import Iterable, Set, Tuple

from models.knowledge import ClassFact, FieldFact, MethodFact, TypeFacts
from models.syntax import Assign, FieldAccess, If, ReflectSet, Var, While
from subjectlang.checker import SemanticModel
from subjectlang.interpreter import constant_value

logger = logging.getLogger(__name__)


def _statements(stmts) -> Iterable:
    for stmt in stmts:
        yield stmt
        if isinstance(stmt, If):
            yield from _statements(stmt.then_body)
            yield from _statements(stmt.else_body or [])
        elif isinstance(stmt, While):
            yield from _statements(stmt.body)


def mutated_fields(model: SemanticModel) -> Set[Tuple[str, str]]:
    """(owner, name) of every field written somewhere in the project."""
    written: Set[Tuple[str, str]] = set()
    for method in model.methods.values():
        for stmt in _statements(method.body or []):
            fdecl = None
            if isinstance(stmt, ReflectSet):
                fdecl = model.field_targets.get(id(stmt))
            elif isinstance(stmt, Assign):
                if isinstance(stmt.target, Var):
                    kind, found = model.name_kinds.get(id(stmt.target), (None, None))
                    fdecl = found if kind == "field" else None
                elif isinstance(stmt.target, FieldAccess):
                    fdecl = model.field_targets.get(id(stmt.target))
            if fdecl is not None:
                written.add((fdecl.owner, fdecl.name))
    return written


def extract_type_facts(model: SemanticModel) -> TypeFacts:
    facts = TypeFacts()
    written = mutated_fields(model)
    for name, cls in model.classes.items():
        path = model.class_paths[name]
        facts.classes.append(ClassFact(
            name=name, superclass=model.superclass_of(name), is_abstract=cls.is_abstract,
            instantiable=not cls.is_abstract, path=path, span=cls.span,
        ))
        for method in cls.methods:
            facts.methods.append(MethodFact(
                id=method.method_id, owner=name, name=method.name, signature=method.signature,
                param_names=[p.name for p in method.params], param_types=method.param_types,
                return_type=method.return_type, access=method.access, is_static=method.is_static,
                is_abstract=method.is_abstract, path=path, span=method.span,
            ))
        for fdecl in cls.fields:
            has_init = fdecl.initializer is not None
            facts.fields.append(FieldFact(
                id=f"{name}.{fdecl.name}", owner=name, name=fdecl.name,
                declared_type=fdecl.declared_type, access=fdecl.access, is_static=fdecl.is_static,
                initializer=constant_value(fdecl.initializer) if has_init else None,
                has_initializer=has_init, is_mutated=(name, fdecl.name) in written,
                path=path, span=fdecl.span,
            ))

    def order(fact):
        return (fact.path, fact.span.key())

    facts.classes.sort(key=order)
    facts.methods.sort(key=order)
    facts.fields.sort(key=order)
    logger.debug("type facts: %d class(es), %d method(s), %d field(s)",
                 len(facts.classes), len(facts.methods), len(facts.fields))
    return facts
