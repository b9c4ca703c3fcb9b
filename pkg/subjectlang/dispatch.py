from typing import Optional, Protocol, TypeVar

from models.errors import NoSuchMethodError

T = TypeVar("T", covariant=True)


class DispatchHierarchy(Protocol[T]):
    def superclass_of(self, class_name: str) -> Optional[str]: ...

    def declared_method(self, class_name: str, signature: str) -> Optional[T]: ...


def resolve_dispatch(runtime_class: str, signature: str, hierarchy: DispatchHierarchy[T]) -> T:
    """Return the method declared lowest on the chain from ``runtime_class`` upward."""
    seen = set()
    current: Optional[str] = runtime_class
    while current is not None and current not in seen:
        seen.add(current)
        found = hierarchy.declared_method(current, signature)
        if found is not None:
            return found
        current = hierarchy.superclass_of(current)
    raise NoSuchMethodError(
        f"no method {signature} on the chain of {runtime_class}",
        detail={"class": runtime_class, "signature": signature},
    )
