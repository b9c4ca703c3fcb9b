"""Symbolic replay of one CFG path.

Parameters stay symbolic (``Var``); locals, temporaries of built-in calls and
fields written earlier on the path are substituted; constant fields are
replaced by their initializer; everything that can be folded is folded.
User-call results remain opaque ``TempRef`` terms. A mutable field read after
a user call becomes a ``STALE_FIELD`` temp: the callee may have written it.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from models.errors import NotFoundError
from models.knowledge import CallSite, Cfg, CfgPath, MethodFact, NodeKind, TypeFacts
from models.syntax import (
    TYPE_DEFAULTS, Assign, Binary, BoolLit, Call, CharLit, FieldRef, IntLit, MethodCall, New,
    ReflectCall, ReflectSet, Return, StringLit, TempRef, This, Unary, Var, VarDecl,
)
from knowledge.dataflow import literal_value, walk_expr
from subjectlang.interpreter import SubjectFault, evaluate_builtin, truncating_div

logger = logging.getLogger(__name__)

# prefix of a TempRef standing for a mutable field read after a user call
STALE_FIELD = "$field:"


def make_literal(value: Any, type_name: Optional[str] = None):
    if isinstance(value, bool):
        return BoolLit(value=value)
    if isinstance(value, int):
        return IntLit(value=value)
    if type_name == "char":
        return CharLit(value=value)
    return StringLit(value=value)


def _fold_binary(op: str, left: Any, right: Any) -> Tuple[bool, Any]:
    if op == "+":
        return True, left + right
    if op == "-":
        return True, left - right
    if op == "*":
        return True, left * right
    if op in ("/", "%"):
        if right == 0:
            return False, None
        quotient = truncating_div(left, right)
        return True, quotient if op == "/" else left - right * quotient
    if op == "==":
        return True, left == right
    if op == "!=":
        return True, left != right
    if op == "<":
        return True, left < right
    if op == "<=":
        return True, left <= right
    if op == ">":
        return True, left > right
    if op == ">=":
        return True, left >= right
    if op == "&&":
        return True, left and right
    return True, left or right


def _literal_of(value: Any, like) -> Any:
    if isinstance(like, CharLit) and isinstance(value, str):
        return CharLit(value=value)
    return make_literal(value)


@dataclass
class PathCall:
    node: str
    site: CallSite
    args: List[Any]


@dataclass
class SymbolicOutcome:
    conditions: List[Tuple[Any, bool, str]] = field(default_factory=list)
    returned: Optional[Any] = None
    returns_value: bool = False
    calls: Dict[str, PathCall] = field(default_factory=dict)


class SymbolicPath:
    def __init__(self, cfg: Cfg, path: CfgPath, method: MethodFact, facts: TypeFacts,
                 fold_constants: bool = True):
        self.cfg = cfg
        self.path = path
        self.method = method
        self.facts = facts
        self.fold_constants = fold_constants
        self.locals: Dict[str, Any] = {name: Var(name=name) for name in method.param_names}
        self.fields: Dict[str, Any] = {}
        self.temps: Dict[str, Any] = {}
        self.after_call = False

    # -- evaluation --------------------------------------------------------

    def _field_key(self, ref: FieldRef) -> Optional[str]:
        if ref.is_static or isinstance(ref.target, This):
            return ref.qualified
        return None

    def _owner_of(self, class_name: str, name: str) -> Optional[str]:
        for owner in self.facts.chain(class_name):
            if any(f.owner == owner and f.name == name for f in self.facts.fields):
                return owner
        return None

    def _mutable(self, ref: FieldRef) -> bool:
        try:
            return self.facts.field(ref.owner, ref.name).is_mutated
        except NotFoundError:
            return True

    def value(self, expr) -> Any:
        if isinstance(expr, (IntLit, BoolLit, CharLit, StringLit, New, This)):
            return expr
        if isinstance(expr, Var):
            return self.locals.get(expr.name, expr)
        if isinstance(expr, TempRef):
            return self.temps.get(expr.name, expr)
        if isinstance(expr, FieldRef):
            key = self._field_key(expr)
            if key is not None and key in self.fields:
                return self.fields[key]
            if self.after_call and self._mutable(expr):
                return TempRef(name=f"{STALE_FIELD}{expr.qualified}")
            if key is not None and self.fold_constants:
                fact = self.facts.field(expr.owner, expr.name)
                if fact.is_constant:
                    return make_literal(fact.initializer, fact.declared_type)
            target = None if expr.target is None else (
                expr.target if isinstance(expr.target, This) else self.value(expr.target))
            return FieldRef(owner=expr.owner, name=expr.name, is_static=expr.is_static, target=target)
        if isinstance(expr, Unary):
            operand = self.value(expr.operand)
            is_const, inner = literal_value(operand)
            if is_const:
                return make_literal(not inner if expr.op == "!" else -inner)
            if expr.op == "!" and isinstance(operand, Unary) and operand.op == "!":
                return operand.operand
            return Unary(op=expr.op, operand=operand)
        if isinstance(expr, Binary):
            return self._binary(expr.op, self.value(expr.left), self.value(expr.right))
        if isinstance(expr, Call):
            return Call(name=expr.name, args=[self.value(a) for a in expr.args])
        if isinstance(expr, (MethodCall, ReflectCall)):
            return expr
        return expr

    def _binary(self, op: str, left, right):
        left_const, left_value = literal_value(left)
        right_const, right_value = literal_value(right)
        if left_const and right_const:
            ok, value = _fold_binary(op, left_value, right_value)
            if ok:
                return _literal_of(value, left) if op in ("+", "-", "*", "/", "%") else make_literal(value)
        if op == "&&":
            if left_const:
                return right if left_value else make_literal(False)
        if op == "||":
            if left_const:
                return make_literal(True) if left_value else right
        return Binary(op=op, left=left, right=right)

    def builtin(self, site: CallSite, args: List[Any]):
        values = [literal_value(a) for a in args]
        if all(is_const for is_const, _ in values):
            try:
                result = evaluate_builtin(site.name, [v for _, v in values])
            except SubjectFault:
                return Call(name=site.name, args=args)
            return CharLit(value=result) if site.name == "charAt" else make_literal(result)
        return Call(name=site.name, args=args)

    # -- replay ------------------------------------------------------------

    def run(self) -> SymbolicOutcome:
        nodes = self.cfg.node_map()
        outcomes = {ob.node: ob.outcome for ob in self.path.obligations}
        out = SymbolicOutcome()
        for nid in self.path.node_ids:
            node = nodes[nid]
            if node.kind == NodeKind.CALL:
                site = node.call
                args = [self.value(a) for a in site.args]
                if site.is_builtin:
                    self.temps[site.result] = self.builtin(site, args)
                else:
                    self.temps[site.result] = TempRef(name=site.result)
                    out.calls[site.result] = PathCall(node=nid, site=site, args=args)
                    # the callee may write any mutable field
                    self.fields.clear()
                    self.after_call = True
            elif node.kind == NodeKind.BRANCH and nid in outcomes:
                out.conditions.append((self.value(node.guard), outcomes[nid], node.label or ""))
            elif node.kind == NodeKind.STATEMENT:
                self._statement(node.statement, out)
        return out

    def _statement(self, stmt, out: SymbolicOutcome) -> None:
        if isinstance(stmt, VarDecl):
            if stmt.init is not None:
                self.locals[stmt.name] = self.value(stmt.init)
            elif stmt.type_name in TYPE_DEFAULTS:
                self.locals[stmt.name] = make_literal(TYPE_DEFAULTS[stmt.type_name], stmt.type_name)
            else:
                self.locals[stmt.name] = TempRef(name=f"${stmt.name}")
        elif isinstance(stmt, Assign):
            value = self.value(stmt.value)
            if isinstance(stmt.target, Var):
                self.locals[stmt.target.name] = value
            elif isinstance(stmt.target, FieldRef):
                key = self._field_key(stmt.target)
                if key is not None:
                    self.fields[key] = value
        elif isinstance(stmt, ReflectSet):
            owner = self._owner_of(stmt.class_name, stmt.field)
            if stmt.receiver is None and owner is not None:
                self.fields[f"{owner}.{stmt.field}"] = self.value(stmt.value)
        elif isinstance(stmt, Return):
            out.returns_value = stmt.value is not None
            out.returned = self.value(stmt.value) if stmt.value is not None else None


def replay(cfg: Cfg, path: CfgPath, method: MethodFact, facts: TypeFacts,
           fold_constants: bool = True) -> SymbolicOutcome:
    return SymbolicPath(cfg, path, method, facts, fold_constants).run()


def contains_temp(expr) -> bool:
    return any(isinstance(part, TempRef) for part in walk_expr(expr))


def contains_stale_field(expr) -> bool:
    return any(isinstance(part, TempRef) and part.name.startswith(STALE_FIELD) for part in walk_expr(expr))
