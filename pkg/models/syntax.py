"""Syntax tree for the subject language.

Every node is a pydantic model tagged by ``kind`` so that trees, and the CFG
payloads built from them, serialize to JSON and validate back without a
hand-written codec. ``FieldRef`` and ``TempRef`` never come out of the parser;
the CFG builder introduces them when it resolves names and lifts calls.
"""

from __future__ import annotations

from enum import Enum
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field


PRIMITIVE_TYPES = ("int", "bool", "char", "string")
VOID = "void"

# name -> (parameter types, return type)
BUILTINS: Dict[str, Tuple[Tuple[str, ...], str]] = {
    "length": (("string",), "int"),
    "charAt": (("string", "int"), "char"),
    "indexOf": (("string", "char"), "int"),
    "substring": (("string", "int", "int"), "string"),
    "concat": (("string", "string"), "string"),
}

KEYWORDS = frozenset(
    {
        "class", "extends", "abstract", "public", "private", "static",
        "int", "bool", "char", "string", "void", "if", "else", "while",
        "return", "new", "this", "true", "false", "reflect", "call", "set",
    }
)

TYPE_DEFAULTS: Dict[str, Any] = {"int": 0, "bool": False, "char": "\0", "string": ""}


def signature_of(name: str, param_types: List[str]) -> str:
    return f"{name}({','.join(param_types)})"


def method_id_of(owner: str, name: str, param_types: List[str]) -> str:
    return f"{owner}#{name}/({','.join(param_types)})"


class Access(str, Enum):
    PUBLIC = "public"
    PRIVATE = "private"


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


class Span(BaseModel):
    model_config = ConfigDict(frozen=True)

    line: int = 0
    column: int = 0
    end_line: int = 0
    end_column: int = 0

    def key(self) -> Tuple[int, int, int, int]:
        return (self.line, self.column, self.end_line, self.end_column)

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


class Diagnostic(BaseModel):
    severity: Severity = Severity.ERROR
    span: Span
    code: str
    message: str
    path: str = ""

    def sort_key(self) -> Tuple[str, Tuple[int, int, int, int], str, str]:
        return (self.path, self.span.key(), self.code, self.message)

    def render(self) -> str:
        where = f"{self.path}:{self.span}" if self.path else str(self.span)
        return f"{where}: {self.severity.value} {self.code}: {self.message}"


class Node(BaseModel):
    span: Span = Field(default_factory=Span)


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------

class IntLit(Node):
    kind: Literal["int_lit"] = "int_lit"
    value: int


class BoolLit(Node):
    kind: Literal["bool_lit"] = "bool_lit"
    value: bool


class CharLit(Node):
    kind: Literal["char_lit"] = "char_lit"
    value: str


class StringLit(Node):
    kind: Literal["string_lit"] = "string_lit"
    value: str


class Var(Node):
    kind: Literal["var"] = "var"
    name: str


class This(Node):
    kind: Literal["this"] = "this"


class FieldAccess(Node):
    kind: Literal["field_access"] = "field_access"
    target: Expr
    name: str


class Call(Node):
    """Unqualified call: a built-in or a method of the enclosing class chain."""

    kind: Literal["call"] = "call"
    name: str
    args: List[Expr] = Field(default_factory=list)


class MethodCall(Node):
    kind: Literal["method_call"] = "method_call"
    target: Expr
    name: str
    args: List[Expr] = Field(default_factory=list)


class New(Node):
    kind: Literal["new"] = "new"
    class_name: str


class Unary(Node):
    kind: Literal["unary"] = "unary"
    op: str
    operand: Expr


class Binary(Node):
    kind: Literal["binary"] = "binary"
    op: str
    left: Expr
    right: Expr


class ReflectCall(Node):
    kind: Literal["reflect_call"] = "reflect_call"
    receiver: Optional[str] = None
    class_name: str
    method: str
    args: List[Expr] = Field(default_factory=list)


class FieldRef(Node):
    kind: Literal["field_ref"] = "field_ref"
    owner: str
    name: str
    is_static: bool
    target: Optional[Expr] = None

    @property
    def qualified(self) -> str:
        return f"{self.owner}.{self.name}"


class TempRef(Node):
    kind: Literal["temp"] = "temp"
    name: str


Expr = Annotated[
    Union[
        IntLit, BoolLit, CharLit, StringLit, Var, This, FieldAccess, Call,
        MethodCall, New, Unary, Binary, ReflectCall, FieldRef, TempRef,
    ],
    Field(discriminator="kind"),
]

LITERALS = (IntLit, BoolLit, CharLit, StringLit)


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------

class VarDecl(Node):
    kind: Literal["var_decl"] = "var_decl"
    type_name: str
    name: str
    init: Optional[Expr] = None


class Assign(Node):
    kind: Literal["assign"] = "assign"
    target: Expr
    value: Expr


class If(Node):
    kind: Literal["if"] = "if"
    cond: Expr
    then_body: List[Stmt] = Field(default_factory=list)
    else_body: Optional[List[Stmt]] = None


class While(Node):
    kind: Literal["while"] = "while"
    cond: Expr
    body: List[Stmt] = Field(default_factory=list)


class Return(Node):
    kind: Literal["return"] = "return"
    value: Optional[Expr] = None


class ExprStmt(Node):
    kind: Literal["expr_stmt"] = "expr_stmt"
    expr: Expr


class ReflectSet(Node):
    kind: Literal["reflect_set"] = "reflect_set"
    receiver: Optional[str] = None
    class_name: str
    field: str
    value: Expr


Stmt = Annotated[
    Union[VarDecl, Assign, If, While, Return, ExprStmt, ReflectSet],
    Field(discriminator="kind"),
]


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------

class Param(Node):
    name: str
    type_name: str


class FieldDecl(Node):
    name: str
    declared_type: str
    is_static: bool = False
    access: Access = Access.PUBLIC
    initializer: Optional[Expr] = None
    owner: str = ""


class MethodDecl(Node):
    owner: str = ""
    name: str
    params: List[Param] = Field(default_factory=list)
    return_type: str
    is_static: bool = False
    is_abstract: bool = False
    access: Access = Access.PUBLIC
    body: Optional[List[Stmt]] = None

    @property
    def param_types(self) -> List[str]:
        return [p.type_name for p in self.params]

    @property
    def signature(self) -> str:
        return signature_of(self.name, self.param_types)

    @property
    def method_id(self) -> str:
        return method_id_of(self.owner, self.name, self.param_types)


class ClassDecl(Node):
    name: str
    superclass: Optional[str] = None
    is_abstract: bool = False
    fields: List[FieldDecl] = Field(default_factory=list)
    methods: List[MethodDecl] = Field(default_factory=list)


class SourceUnit(BaseModel):
    path: str
    classes: List[ClassDecl] = Field(default_factory=list)


for _model in (
    FieldAccess, Call, MethodCall, Unary, Binary, ReflectCall, FieldRef,
    VarDecl, Assign, If, While, Return, ExprStmt, ReflectSet,
    FieldDecl, MethodDecl, ClassDecl, SourceUnit,
):
    _model.model_rebuild()


def strip_spans(value: Any) -> Any:
    """Drop span keys from a dumped tree; used for structural equality."""
    if isinstance(value, dict):
        return {k: strip_spans(v) for k, v in value.items() if k != "span"}
    if isinstance(value, list):
        return [strip_spans(v) for v in value]
    return value


def structure(node: BaseModel) -> Any:
    return strip_spans(node.model_dump(mode="json"))
