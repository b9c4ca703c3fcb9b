import logging
from typing import List

from models.context import InvocationKind, InvocationPlan, ReceiverRecipe
from models.errors import AbstractMethodError, NoConcreteReceiverError
from models.knowledge import MethodFact, TypeFacts
from models.syntax import Access
from subjectlang.dispatch import resolve_dispatch

logger = logging.getLogger(__name__)


def receiver_candidates(method: MethodFact, facts: TypeFacts) -> List[str]:
    """Concrete classes that can receive ``method``, best first.

    Classes whose dispatch lands on ``method`` itself come first, then the
    nearest subclasses, then name order.
    """
    def rank(name: str):
        lands = method.access == Access.PRIVATE or resolve_dispatch(name, method.signature, facts).id == method.id
        # landing on the method itself outranks closeness; the name only breaks ties
        return (not lands, facts.distance(name, method.owner), name)

    return sorted(facts.concrete_classes_under(method.owner), key=rank)


def plan_invocation(focal: str, facts: TypeFacts) -> InvocationPlan:
    method = facts.method(focal)
    if method.is_abstract:
        raise AbstractMethodError(f"{focal} is abstract and cannot be invoked", detail={"method": focal})
    private = method.access == Access.PRIVATE

    if method.is_static:
        kind = InvocationKind.STATIC_REFLECTIVE if private else InvocationKind.STATIC_DIRECT
        return InvocationPlan(focal=focal, kind=kind, dispatch_target=focal, needs_reflection=private)

    owner = facts.class_fact(method.owner)
    if owner.instantiable:
        receiver, recipe = owner.name, ReceiverRecipe.NEW_CONCRETE
    else:
        candidates = receiver_candidates(method, facts)
        if not candidates:
            raise NoConcreteReceiverError(
                f"{method.owner} is abstract and has no concrete subclass to receive {method.name}",
                detail={"method": focal, "class": method.owner},
            )
        receiver, recipe = candidates[0], ReceiverRecipe.NEW_CONCRETE_SUBCLASS

    # private methods are invoked as declared; public ones dispatch on the receiver
    target = focal if private else resolve_dispatch(receiver, method.signature, facts).id
    kind = InvocationKind.INSTANCE_REFLECTIVE if private else InvocationKind.INSTANCE_DIRECT
    plan = InvocationPlan(
        focal=focal, kind=kind, receiver_recipe=recipe, receiver_class=receiver,
        dispatch_target=target, needs_reflection=private,
    )
    logger.debug("invocation plan for %s: %s via %s", focal, plan.kind.value, receiver)
    return plan
