from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, Field

from models.errors import NotFoundError
from models.syntax import Access, Expr, Span, Stmt


# ---------------------------------------------------------------------------
# Type facts
# ---------------------------------------------------------------------------

class ClassFact(BaseModel):
    name: str
    superclass: Optional[str] = None
    is_abstract: bool = False
    instantiable: bool = True
    path: str = ""
    span: Span = Field(default_factory=Span)


class MethodFact(BaseModel):
    id: str
    owner: str
    name: str
    signature: str
    param_names: List[str] = Field(default_factory=list)
    param_types: List[str] = Field(default_factory=list)
    return_type: str
    access: Access = Access.PUBLIC
    is_static: bool = False
    is_abstract: bool = False
    path: str = ""
    span: Span = Field(default_factory=Span)

    @property
    def params(self) -> List[Tuple[str, str]]:
        return list(zip(self.param_names, self.param_types))


class FieldFact(BaseModel):
    id: str
    owner: str
    name: str
    declared_type: str
    access: Access = Access.PUBLIC
    is_static: bool = False
    initializer: Optional[Any] = None
    has_initializer: bool = False
    is_mutated: bool = False
    path: str = ""
    span: Span = Field(default_factory=Span)

    @property
    def is_constant(self) -> bool:
        return self.has_initializer and not self.is_mutated


class TypeFacts(BaseModel):
    """Class, method and field facts; also a dispatch hierarchy."""

    classes: List[ClassFact] = Field(default_factory=list)
    methods: List[MethodFact] = Field(default_factory=list)
    fields: List[FieldFact] = Field(default_factory=list)

    def class_fact(self, name: str) -> ClassFact:
        for fact in self.classes:
            if fact.name == name:
                return fact
        raise NotFoundError(f"class {name} not found", detail={"class": name})

    def method(self, method_id: str) -> MethodFact:
        for fact in self.methods:
            if fact.id == method_id:
                return fact
        raise NotFoundError(f"method {method_id} not found", detail={"method": method_id})

    def field(self, owner: str, name: str) -> FieldFact:
        for fact in self.fields:
            if fact.owner == owner and fact.name == name:
                return fact
        raise NotFoundError(f"field {owner}.{name} not found", detail={"field": f"{owner}.{name}"})

    def superclass_of(self, class_name: str) -> Optional[str]:
        for fact in self.classes:
            if fact.name == class_name:
                return fact.superclass
        return None

    def declared_method(self, class_name: str, signature: str) -> Optional[MethodFact]:
        for fact in self.methods:
            if fact.owner == class_name and fact.signature == signature:
                return fact
        return None

    def chain(self, class_name: str) -> List[str]:
        out: List[str] = []
        current: Optional[str] = class_name
        while current is not None and current not in out:
            out.append(current)
            current = self.superclass_of(current)
        return out

    def distance(self, sub: str, sup: str) -> Optional[int]:
        chain = self.chain(sub)
        return chain.index(sup) if sup in chain else None

    def concrete_classes_under(self, class_name: str) -> List[str]:
        """Concrete classes whose chain includes ``class_name`` (itself included), by name."""
        return sorted(
            fact.name for fact in self.classes
            if fact.instantiable and class_name in self.chain(fact.name)
        )


# ---------------------------------------------------------------------------
# Control flow
# ---------------------------------------------------------------------------

class NodeKind(str, Enum):
    ENTRY = "entry"
    EXIT = "exit"
    STATEMENT = "statement"
    CALL = "call"
    BRANCH = "branch"


class EdgeLabel(str, Enum):
    TRUE = "true"
    FALSE = "false"
    SEQ = "seq"


EDGE_ORDER = {EdgeLabel.TRUE: 0, EdgeLabel.FALSE: 1, EdgeLabel.SEQ: 2}


class CallSite(BaseModel):
    name: str
    callee: str
    dispatch: str
    method_id: Optional[str] = None
    owner: Optional[str] = None
    receiver: Optional[Expr] = None
    receiver_type: Optional[str] = None
    args: List[Expr] = Field(default_factory=list)
    result: str
    reflective: bool = False

    @property
    def is_builtin(self) -> bool:
        return self.dispatch == "builtin"


class CfgNode(BaseModel):
    id: str
    kind: NodeKind
    span: Optional[Span] = None
    loop_head: bool = False
    statement: Optional[Stmt] = None
    call: Optional[CallSite] = None
    guard: Optional[Expr] = None
    label: Optional[str] = None
    branch: Optional[str] = None


class CfgEdge(BaseModel):
    source: str
    target: str
    label: EdgeLabel = EdgeLabel.SEQ


class Cfg(BaseModel):
    method: str
    nodes: List[CfgNode] = Field(default_factory=list)
    edges: List[CfgEdge] = Field(default_factory=list)

    @property
    def entry(self) -> str:
        return self.nodes[0].id

    @property
    def exit(self) -> str:
        for node in self.nodes:
            if node.kind == NodeKind.EXIT:
                return node.id
        raise NotFoundError(f"cfg of {self.method} has no exit")

    def node(self, node_id: str) -> CfgNode:
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise NotFoundError(f"node {node_id} not found", detail={"node": node_id})

    def node_map(self) -> Dict[str, CfgNode]:
        return {node.id: node for node in self.nodes}

    def successors(self, node_id: str) -> List[CfgEdge]:
        out = [edge for edge in self.edges if edge.source == node_id]
        return sorted(out, key=lambda edge: EDGE_ORDER[edge.label])

    def branch_nodes(self) -> List[CfgNode]:
        return [node for node in self.nodes if node.kind == NodeKind.BRANCH]


class Obligation(BaseModel):
    node: str
    outcome: bool


class CfgPath(BaseModel):
    method: str
    index: int
    node_ids: List[str] = Field(default_factory=list)
    obligations: List[Obligation] = Field(default_factory=list)

    @property
    def id(self) -> str:
        return path_id(self.method, self.index)


def path_id(method_id: str, index: int) -> str:
    return f"{method_id}/p:{index}"


class PathEnumeration(BaseModel):
    paths: List[CfgPath] = Field(default_factory=list)
    truncated: bool = False


# ---------------------------------------------------------------------------
# Data flow
# ---------------------------------------------------------------------------

class ReturnKind(str, Enum):
    EQUALS = "equals"
    NOT_EQUALS = "not-equals"
    TRUTHY = "truthy"
    FALSY = "falsy"
    IN_INT_RANGE = "in-int-range"
    SIGN = "sign"


class ReturnConstraint(BaseModel):
    kind: ReturnKind
    value: Optional[Any] = None
    lo: Optional[int] = None
    hi: Optional[int] = None
    sign: Optional[str] = None

    def bounds(self) -> Tuple[Optional[int], Optional[int]]:
        """Inclusive int bounds for range-like constraints."""
        if self.kind == ReturnKind.SIGN:
            return (None, -1) if self.sign == "negative" else (0, None)
        return self.lo, self.hi

    @property
    def is_range(self) -> bool:
        return self.kind in (ReturnKind.IN_INT_RANGE, ReturnKind.SIGN)

    def holds(self, value: Any) -> bool:
        if self.kind == ReturnKind.TRUTHY:
            return value is True
        if self.kind == ReturnKind.FALSY:
            return value is False
        if self.kind == ReturnKind.EQUALS:
            return value == self.value
        if self.kind == ReturnKind.NOT_EQUALS:
            return value != self.value
        if not isinstance(value, int) or isinstance(value, bool):
            return False
        lo, hi = self.bounds()
        return (lo is None or value >= lo) and (hi is None or value <= hi)

    def render(self) -> str:
        if self.kind in (ReturnKind.TRUTHY, ReturnKind.FALSY):
            return "returns true" if self.kind == ReturnKind.TRUTHY else "returns false"
        if self.kind == ReturnKind.EQUALS:
            return f"returns {self.value!r}"
        if self.kind == ReturnKind.NOT_EQUALS:
            return f"returns anything but {self.value!r}"
        if self.kind == ReturnKind.SIGN:
            return "returns a negative value" if self.sign == "negative" else "returns a non-negative value"
        if self.lo is not None and self.hi is not None:
            return f"returns a value in [{self.lo}, {self.hi}]"
        if self.lo is not None:
            return f"returns a value >= {self.lo}"
        return f"returns a value <= {self.hi}"


def range_constraint(lo: Optional[int], hi: Optional[int]) -> ReturnConstraint:
    if lo is None and hi == -1:
        return ReturnConstraint(kind=ReturnKind.SIGN, sign="negative")
    if lo == 0 and hi is None:
        return ReturnConstraint(kind=ReturnKind.SIGN, sign="nonnegative")
    return ReturnConstraint(kind=ReturnKind.IN_INT_RANGE, lo=lo, hi=hi)


class DependentVariable(BaseModel):
    field: str
    owner: str
    name: str
    access: Access
    is_static: bool
    declared_type: str
    role: str = "appears-in-guard"


class DependentCall(BaseModel):
    node: str
    callee: str
    name: str
    dispatch: str
    method_id: Optional[str] = None
    owner: Optional[str] = None
    receiver_type: Optional[str] = None
    receiver_is_this: bool = False
    required_return: Optional[ReturnConstraint] = None


class PathDependencies(BaseModel):
    variables: List[DependentVariable] = Field(default_factory=list)
    calls: List[DependentCall] = Field(default_factory=list)


class CallEdge(BaseModel):
    caller: str
    node: str
    callee: str
    name: str
    dispatch: str
    owner: Optional[str] = None
    method_id: Optional[str] = None
    receiver_type: Optional[str] = None
