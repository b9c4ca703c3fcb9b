"""Per-method control-flow graphs.

Calls (built-ins included) are lifted out of expressions into their own call
nodes whose results are ``$tN`` temporaries, in evaluation order. Guards of
``if``/``while`` are desugared: every operand of ``&&``/``||`` (after peeling
``!``) becomes one branch node. A ``while`` is rotated into an entry test,
the body, and a second copy of the test marked ``loop_head`` whose true-edges
go back to the body start.

Short-circuit operators in value positions stay value expressions; calls in
their right operand are not lifted.
"""

import itertools
import logging
from typing import Dict, List, Optional, Tuple

from models.errors import AbstractMethodError
from models.knowledge import EDGE_ORDER, CallSite, Cfg, CfgEdge, CfgNode, EdgeLabel, NodeKind
from models.syntax import (
    Assign, Binary, BoolLit, Call, CharLit, ExprStmt, FieldAccess, FieldRef, If, IntLit,
    MethodCall, MethodDecl, New, ReflectCall, ReflectSet, Return, StringLit, TempRef, This,
    Unary, Var, VarDecl, While,
)
from models.trace import branch_key
from subjectlang.checker import SemanticModel
from subjectlang.printer import print_expr

logger = logging.getLogger(__name__)

Pending = List[Tuple[int, EdgeLabel]]


def node_id(method_id: str, index: int) -> str:
    return f"m:{method_id}/n:{index}"


class _Draft:
    __slots__ = ("kind", "payload")

    def __init__(self, kind: NodeKind, payload: dict):
        self.kind = kind
        self.payload = payload


class _Builder:
    def __init__(self, method: MethodDecl, model: SemanticModel):
        self.method = method
        self.model = model
        self.drafts: List[_Draft] = []
        self.edges: List[Tuple[int, int, EdgeLabel]] = []
        self.returns: Pending = []
        self.temps = itertools.count()
        entry = self._new(NodeKind.ENTRY, span=method.span)
        self.frontier: Pending = [(entry, EdgeLabel.SEQ)]

    def _new(self, kind: NodeKind, **payload) -> int:
        self.drafts.append(_Draft(kind, payload))
        return len(self.drafts) - 1

    def _connect(self, pending: Pending, target: int) -> None:
        for source, label in pending:
            self.edges.append((source, target, label))

    def _emit(self, kind: NodeKind, **payload) -> int:
        index = self._new(kind, **payload)
        self._connect(self.frontier, index)
        self.frontier = [(index, EdgeLabel.SEQ)]
        return index

    # -- expressions -------------------------------------------------------

    def _field_ref(self, fdecl, target, span) -> FieldRef:
        return FieldRef(owner=fdecl.owner, name=fdecl.name, is_static=fdecl.is_static,
                        target=None if fdecl.is_static else target, span=span)

    def lower(self, expr, lift: bool = True):
        if isinstance(expr, (IntLit, BoolLit, CharLit, StringLit, New)):
            return expr
        if isinstance(expr, This):
            return This(span=expr.span)
        if isinstance(expr, Var):
            kind, fdecl = self.model.name_kinds[id(expr)]
            if kind == "local":
                return Var(name=expr.name, span=expr.span)
            return self._field_ref(fdecl, This(span=expr.span), expr.span)
        if isinstance(expr, FieldAccess):
            fdecl = self.model.field_targets[id(expr)]
            target = None if fdecl.is_static else self.lower(expr.target, lift)
            return self._field_ref(fdecl, target, expr.span)
        if isinstance(expr, Unary):
            return Unary(op=expr.op, operand=self.lower(expr.operand, lift), span=expr.span)
        if isinstance(expr, Binary):
            left = self.lower(expr.left, lift)
            right = self.lower(expr.right, lift and expr.op not in ("&&", "||"))
            return Binary(op=expr.op, left=left, right=right, span=expr.span)
        if isinstance(expr, (Call, MethodCall, ReflectCall)):
            return self._lift(expr) if lift else self._keep_call(expr)
        raise TypeError(f"cannot lower {type(expr).__name__}")

    def _keep_call(self, expr):
        args = [self.lower(a, False) for a in expr.args]
        if isinstance(expr, Call):
            return Call(name=expr.name, args=args, span=expr.span)
        if isinstance(expr, MethodCall):
            return MethodCall(target=self.lower(expr.target, False), name=expr.name, args=args, span=expr.span)
        return ReflectCall(receiver=expr.receiver, class_name=expr.class_name, method=expr.method,
                           args=args, span=expr.span)

    def _lift(self, expr) -> TempRef:
        target = self.model.call_targets[id(expr)]
        receiver: Optional[object] = None
        receiver_type: Optional[str] = None
        if isinstance(expr, Call):
            if target.kind not in ("builtin", "static"):
                receiver, receiver_type = This(span=expr.span), self.method.owner
        elif isinstance(expr, MethodCall):
            if target.kind != "static":
                receiver = self.lower(expr.target)
                receiver_type = self.model.type_of(expr.target)
        elif expr.receiver is not None:
            receiver, receiver_type = Var(name=expr.receiver, span=expr.span), expr.class_name
        args = [self.lower(a) for a in expr.args]
        result = f"$t{next(self.temps)}"
        method = target.method
        site = CallSite(
            name=target.name, callee=target.signature, dispatch=target.kind,
            method_id=method.method_id if method is not None else None,
            owner=method.owner if method is not None else None,
            receiver=receiver, receiver_type=receiver_type, args=args, result=result,
            reflective=isinstance(expr, ReflectCall),
        )
        self._emit(NodeKind.CALL, span=expr.span, call=site)
        return TempRef(name=result, span=expr.span)

    # -- guards ------------------------------------------------------------

    def cond(self, expr, frontier: Pending) -> Tuple[Pending, Pending]:
        if isinstance(expr, Binary) and expr.op == "&&":
            left_true, left_false = self.cond(expr.left, frontier)
            right_true, right_false = self.cond(expr.right, left_true)
            return right_true, left_false + right_false
        if isinstance(expr, Binary) and expr.op == "||":
            left_true, left_false = self.cond(expr.left, frontier)
            right_true, right_false = self.cond(expr.right, left_false)
            return left_true + right_true, right_false
        if isinstance(expr, Unary) and expr.op == "!":
            inner_true, inner_false = self.cond(expr.operand, frontier)
            return inner_false, inner_true
        self.frontier = frontier
        guard = self.lower(expr)
        index = self._emit(
            NodeKind.BRANCH, span=expr.span, guard=guard, label=print_expr(expr),
            branch=branch_key(self.method.method_id, expr.span),
        )
        return [(index, EdgeLabel.TRUE)], [(index, EdgeLabel.FALSE)]

    # -- statements --------------------------------------------------------

    def block(self, stmts) -> None:
        for stmt in stmts:
            self.stmt(stmt)

    def stmt(self, stmt) -> None:
        if isinstance(stmt, VarDecl):
            init = self.lower(stmt.init) if stmt.init is not None else None
            ir = VarDecl(type_name=stmt.type_name, name=stmt.name, init=init, span=stmt.span)
            self._emit(NodeKind.STATEMENT, span=stmt.span, statement=ir)
        elif isinstance(stmt, Assign):
            target = self.lower(stmt.target)
            value = self.lower(stmt.value)
            self._emit(NodeKind.STATEMENT, span=stmt.span, statement=Assign(target=target, value=value, span=stmt.span))
        elif isinstance(stmt, ExprStmt):
            before = len(self.drafts)
            expr = self.lower(stmt.expr)
            if len(self.drafts) == before:
                self._emit(NodeKind.STATEMENT, span=stmt.span, statement=ExprStmt(expr=expr, span=stmt.span))
        elif isinstance(stmt, ReflectSet):
            value = self.lower(stmt.value)
            ir = ReflectSet(receiver=stmt.receiver, class_name=stmt.class_name, field=stmt.field,
                            value=value, span=stmt.span)
            self._emit(NodeKind.STATEMENT, span=stmt.span, statement=ir)
        elif isinstance(stmt, Return):
            value = self.lower(stmt.value) if stmt.value is not None else None
            self._emit(NodeKind.STATEMENT, span=stmt.span, statement=Return(value=value, span=stmt.span))
            self.returns.extend(self.frontier)
            self.frontier = []
        elif isinstance(stmt, If):
            true_exits, false_exits = self.cond(stmt.cond, self.frontier)
            self.frontier = true_exits
            self.block(stmt.then_body)
            after_then = self.frontier
            self.frontier = false_exits
            if stmt.else_body is not None:
                self.block(stmt.else_body)
            self.frontier = after_then + self.frontier
        elif isinstance(stmt, While):
            self._while(stmt)

    def _while(self, stmt: While) -> None:
        true_exits, false_exits = self.cond(stmt.cond, self.frontier)
        body_start = len(self.drafts)
        self.frontier = true_exits
        self.block(stmt.body)
        if not self.frontier:
            self.frontier = false_exits
            return
        copy_start = len(self.drafts)
        again_true, again_false = self.cond(stmt.cond, self.frontier)
        for index in range(copy_start, len(self.drafts)):
            if self.drafts[index].kind == NodeKind.BRANCH:
                self.drafts[index].payload["loop_head"] = True
                break
        self._connect(again_true, body_start if body_start < copy_start else copy_start)
        self.frontier = false_exits + again_false

    # -- assembly ----------------------------------------------------------

    def finish(self) -> Cfg:
        exit_index = self._new(NodeKind.EXIT, span=None)
        self._connect(self.frontier + self.returns, exit_index)
        method_id = self.method.method_id

        outgoing: Dict[int, List[Tuple[int, EdgeLabel]]] = {}
        for source, target, label in self.edges:
            outgoing.setdefault(source, []).append((target, label))
        for targets in outgoing.values():
            targets.sort(key=lambda item: EDGE_ORDER[item[1]])

        numbering: Dict[int, int] = {}
        stack = [0]
        while stack:
            current = stack.pop()
            if current in numbering:
                continue
            numbering[current] = len(numbering)
            for target, _ in reversed(outgoing.get(current, [])):
                if target not in numbering:
                    stack.append(target)
        if exit_index not in numbering:
            numbering[exit_index] = len(numbering)

        nodes = []
        for draft_index, number in sorted(numbering.items(), key=lambda item: item[1]):
            draft = self.drafts[draft_index]
            nodes.append(CfgNode(id=node_id(method_id, number), kind=draft.kind, **draft.payload))
        edges = [
            CfgEdge(source=node_id(method_id, numbering[s]), target=node_id(method_id, numbering[t]), label=label)
            for s, t, label in sorted(
                (e for e in self.edges if e[0] in numbering and e[1] in numbering),
                key=lambda e: (numbering[e[0]], EDGE_ORDER[e[2]], numbering[e[1]]),
            )
        ]
        return Cfg(method=method_id, nodes=nodes, edges=edges)


def build_cfg(method: MethodDecl, model: SemanticModel) -> Cfg:
    if method.body is None:
        raise AbstractMethodError(f"{method.method_id} has no body", detail={"method": method.method_id})
    builder = _Builder(method, model)
    builder.block(method.body)
    cfg = builder.finish()
    logger.debug("cfg %s: %d node(s), %d edge(s)", cfg.method, len(cfg.nodes), len(cfg.edges))
    return cfg
