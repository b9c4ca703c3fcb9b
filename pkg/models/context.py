from enum import Enum
from typing import Annotated, Any, Dict, List, Literal, Optional, Union

from pydantic import BaseModel, Field

from models.knowledge import CfgPath, ReturnConstraint
from models.syntax import Access
from subjectlang.printer import quote_char, quote_string


# ---------------------------------------------------------------------------
# Parameter predicates
# ---------------------------------------------------------------------------

class IntConstraint(BaseModel):
    kind: Literal["int"] = "int"
    lo: Optional[int] = None
    lo_closed: bool = True
    hi: Optional[int] = None
    hi_closed: bool = True
    excluded: List[int] = Field(default_factory=list)

    @property
    def lower(self) -> Optional[int]:
        if self.lo is None:
            return None
        return self.lo if self.lo_closed else self.lo + 1

    @property
    def upper(self) -> Optional[int]:
        if self.hi is None:
            return None
        return self.hi if self.hi_closed else self.hi - 1

    def holds(self, value: Any) -> bool:
        if self.lower is not None and value < self.lower:
            return False
        if self.upper is not None and value > self.upper:
            return False
        return value not in self.excluded

    def render(self, name: str) -> List[str]:
        parts: List[str] = []
        if self.lower is not None and self.lower == self.upper:
            parts.append(f"{name} == {self.lower}")
        elif self.lo is not None and self.hi is not None:
            low_op = "<=" if self.lo_closed else "<"
            high_op = "<=" if self.hi_closed else "<"
            parts.append(f"{self.lo} {low_op} {name} {high_op} {self.hi}")
        elif self.lo is not None:
            parts.append(f"{name} {'>=' if self.lo_closed else '>'} {self.lo}")
        elif self.hi is not None:
            parts.append(f"{name} {'<=' if self.hi_closed else '<'} {self.hi}")
        parts.extend(f"{name} != {value}" for value in self.excluded)
        return parts


class BoolConstraint(BaseModel):
    kind: Literal["bool"] = "bool"
    value: bool

    def holds(self, value: Any) -> bool:
        return value is self.value

    def render(self, name: str) -> List[str]:
        return [f"{name} == {'true' if self.value else 'false'}"]


class CharConstraint(BaseModel):
    kind: Literal["char"] = "char"
    allowed: Optional[str] = None
    forbidden: str = ""

    def holds(self, value: Any) -> bool:
        if self.allowed is not None and value not in self.allowed:
            return False
        return value not in self.forbidden

    def render(self, name: str) -> List[str]:
        parts: List[str] = []
        if self.allowed is not None:
            if len(self.allowed) == 1:
                parts.append(f"{name} == {quote_char(self.allowed)}")
            else:
                parts.append(f"{name} in {quote_string(self.allowed)}")
        if self.forbidden:
            if len(self.forbidden) == 1:
                parts.append(f"{name} != {quote_char(self.forbidden)}")
            else:
                parts.append(f"{name} not in {quote_string(self.forbidden)}")
        return parts


class StringConstraint(BaseModel):
    kind: Literal["string"] = "string"
    equals: Optional[str] = None
    forbidden: List[str] = Field(default_factory=list)
    min_length: Optional[int] = None
    max_length: Optional[int] = None

    def holds(self, value: Any) -> bool:
        if self.equals is not None and value != self.equals:
            return False
        if self.min_length is not None and len(value) < self.min_length:
            return False
        if self.max_length is not None and len(value) > self.max_length:
            return False
        return value not in self.forbidden

    def render(self, name: str) -> List[str]:
        parts: List[str] = []
        if self.equals is not None:
            parts.append(f"{name} == {quote_string(self.equals)}")
        parts.extend(f"{name} != {quote_string(value)}" for value in self.forbidden)
        if self.min_length is not None and self.min_length == self.max_length:
            parts.append(f"length({name}) == {self.min_length}")
        else:
            if self.min_length is not None:
                parts.append(f"length({name}) >= {self.min_length}")
            if self.max_length is not None:
                parts.append(f"length({name}) <= {self.max_length}")
        return parts


Constraint = Annotated[
    Union[IntConstraint, BoolConstraint, CharConstraint, StringConstraint],
    Field(discriminator="kind"),
]


class ParamPredicate(BaseModel):
    """Conjunction of per-variable atoms; ``empty`` marks a contradiction."""

    empty: bool = False
    atoms: Dict[str, Constraint] = Field(default_factory=dict)

    @property
    def unconstrained(self) -> bool:
        return not self.empty and not self.atoms

    def holds(self, values: Dict[str, Any]) -> bool:
        if self.empty:
            return False
        return all(atom.holds(values[name]) for name, atom in self.atoms.items())

    def render(self) -> List[str]:
        if self.empty:
            return ["no value satisfies the conditions"]
        if not self.atoms:
            return ["unconstrained"]
        out: List[str] = []
        for name, atom in self.atoms.items():
            out.extend(atom.render(name))
        return out


class Unresolved(BaseModel):
    """Guards outside the supported shapes, plus whatever could be derived."""

    guards: List[str] = Field(default_factory=list)
    partial: ParamPredicate = Field(default_factory=ParamPredicate)


# ---------------------------------------------------------------------------
# Distilled context
# ---------------------------------------------------------------------------

class InvocationKind(str, Enum):
    STATIC_DIRECT = "static-direct"
    STATIC_REFLECTIVE = "static-reflective"
    INSTANCE_DIRECT = "instance-direct"
    INSTANCE_REFLECTIVE = "instance-reflective"
    CONSTRUCTOR = "constructor"


class ReceiverRecipe(str, Enum):
    NONE = "none"
    NEW_CONCRETE = "new-concrete"
    NEW_CONCRETE_SUBCLASS = "new-concrete-subclass"


class InvocationPlan(BaseModel):
    focal: str
    kind: InvocationKind
    receiver_recipe: ReceiverRecipe = ReceiverRecipe.NONE
    receiver_class: Optional[str] = None
    dispatch_target: str
    needs_reflection: bool = False

    @property
    def is_static(self) -> bool:
        return self.receiver_recipe == ReceiverRecipe.NONE


class SetVia(str, Enum):
    DIRECT = "direct-assignment"
    REFLECT = "reflect-set"


class VariableRequirement(BaseModel):
    field: str
    owner: str
    name: str
    declared_type: str
    access: Access
    is_static: bool
    set_via: SetVia
    required_value_hint: Optional[Constraint] = None

    def render_hint(self) -> Optional[str]:
        if self.required_value_hint is None:
            return None
        return " and ".join(self.required_value_hint.render(self.field))


class ResolutionStatus(str, Enum):
    RESOLVED = "resolved"
    UNRESOLVED = "unresolved-delegated"
    UNSATISFIABLE = "unsatisfiable"


class ResolutionResult(BaseModel):
    callee: str
    call_node: str = ""
    call_text: str = ""
    required_return: Optional[ReturnConstraint] = None
    chosen_path: Optional[CfgPath] = None
    predicate: Optional[ParamPredicate] = None
    unresolved_guards: List[str] = Field(default_factory=list)
    children: List["ResolutionResult"] = Field(default_factory=list)
    status: ResolutionStatus
    reason: Optional[str] = None


class DistilledContext(BaseModel):
    focal: str
    path: CfgPath
    invocation: InvocationPlan
    variables: List[VariableRequirement] = Field(default_factory=list)
    resolutions: List[ResolutionResult] = Field(default_factory=list)
    obligations_rendered: List[str] = Field(default_factory=list)
    infeasible: bool = False

    @property
    def needs_reflection(self) -> bool:
        """True when the focal or any variable to set is private."""
        return self.invocation.needs_reflection or any(v.set_via == SetVia.REFLECT for v in self.variables)

    def canonical_json(self) -> str:
        return self.model_dump_json(indent=2)


ResolutionResult.model_rebuild()
