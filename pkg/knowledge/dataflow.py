"""Per-path data-flow dependencies.

Locals read by a guard are replaced by their latest definition on the path,
one assignment level deep. Built-in call results are replaced by the call
itself so the fields read in its arguments count as guard reads. Results of
user method calls stay opaque and become dependent calls, annotated with the
return constraint the path's branch outcome places on them.
"""

import logging
from typing import Dict, Iterable, List, Optional, Tuple

from models.knowledge import (
    CallSite, Cfg, CfgPath, DependentCall, DependentVariable, NodeKind, PathDependencies,
    ReturnConstraint, ReturnKind, TypeFacts, range_constraint,
)
from models.syntax import (
    Assign, Binary, BoolLit, Call, CharLit, FieldRef, IntLit, MethodCall, ReflectCall,
    StringLit, TempRef, This, Unary, Var, VarDecl,
)

logger = logging.getLogger(__name__)

COMPARISONS = {"==", "!=", "<", "<=", ">", ">="}
FLIPPED = {"==": "==", "!=": "!=", "<": ">", "<=": ">=", ">": "<", ">=": "<="}
NEGATED = {"==": "!=", "!=": "==", "<": ">=", "<=": ">", ">": "<=", ">=": "<"}


def literal_value(expr) -> Tuple[bool, object]:
    if isinstance(expr, (IntLit, BoolLit, CharLit, StringLit)):
        return True, expr.value
    if isinstance(expr, Unary) and expr.op == "-" and isinstance(expr.operand, IntLit):
        return True, -expr.operand.value
    return False, None


def walk_expr(expr) -> Iterable:
    """Pre-order traversal of an IR expression."""
    if expr is None:
        return
    yield expr
    if isinstance(expr, Binary):
        yield from walk_expr(expr.left)
        yield from walk_expr(expr.right)
    elif isinstance(expr, Unary):
        yield from walk_expr(expr.operand)
    elif isinstance(expr, FieldRef):
        yield from walk_expr(expr.target)
    elif isinstance(expr, MethodCall):
        yield from walk_expr(expr.target)
        for arg in expr.args:
            yield from walk_expr(arg)
    elif isinstance(expr, (Call, ReflectCall)):
        for arg in expr.args:
            yield from walk_expr(arg)


def _offset_of(expr, temp: str) -> Optional[int]:
    """k when ``expr`` is ``temp + k`` (k may be 0 or negative); None otherwise."""
    if isinstance(expr, TempRef):
        return 0 if expr.name == temp else None
    if isinstance(expr, Binary) and expr.op in ("+", "-"):
        is_const, value = literal_value(expr.right)
        if is_const and isinstance(value, int) and not isinstance(value, bool):
            inner = _offset_of(expr.left, temp)
            if inner is not None:
                return inner + value if expr.op == "+" else inner - value
        if expr.op == "+":
            is_const, value = literal_value(expr.left)
            if is_const and isinstance(value, int) and not isinstance(value, bool):
                inner = _offset_of(expr.right, temp)
                if inner is not None:
                    return inner + value
    return None


def return_shape(guard, temp: str, outcome: bool) -> Optional[ReturnConstraint]:
    """The constraint ``outcome`` of ``guard`` places on the call result ``temp``."""
    if isinstance(guard, TempRef) and guard.name == temp:
        return ReturnConstraint(kind=ReturnKind.TRUTHY if outcome else ReturnKind.FALSY)
    if isinstance(guard, Unary) and guard.op == "!":
        return return_shape(guard.operand, temp, not outcome)
    if not (isinstance(guard, Binary) and guard.op in COMPARISONS):
        return None
    op = guard.op if outcome else NEGATED[guard.op]
    offset = _offset_of(guard.left, temp)
    is_const, value = literal_value(guard.right)
    if offset is None or not is_const:
        offset = _offset_of(guard.right, temp)
        is_const, value = literal_value(guard.left)
        op = FLIPPED[op]
    if offset is None or not is_const:
        return None
    if offset != 0:
        if not isinstance(value, int) or isinstance(value, bool):
            return None
        value = value - offset
    if op in ("==", "!="):
        kind = ReturnKind.EQUALS if op == "==" else ReturnKind.NOT_EQUALS
        return ReturnConstraint(kind=kind, value=value)
    if not isinstance(value, int) or isinstance(value, bool):
        return None
    if op == "<":
        return range_constraint(None, value - 1)
    if op == "<=":
        return range_constraint(None, value)
    if op == ">":
        return range_constraint(value + 1, None)
    return range_constraint(value, None)


def combine_returns(constraints: List[Optional[ReturnConstraint]]) -> Optional[ReturnConstraint]:
    if not constraints or any(c is None for c in constraints):
        return None
    first = constraints[0]
    if all(c == first for c in constraints):
        return first
    if all(c.is_range for c in constraints):
        lo: Optional[int] = None
        hi: Optional[int] = None
        for constraint in constraints:
            c_lo, c_hi = constraint.bounds()
            if c_lo is not None:
                lo = c_lo if lo is None else max(lo, c_lo)
            if c_hi is not None:
                hi = c_hi if hi is None else min(hi, c_hi)
        return range_constraint(lo, hi)
    return None


class _PathScan:
    def __init__(self):
        self.defs: Dict[str, object] = {}
        self.sites: Dict[str, Tuple[str, CallSite]] = {}

    def substitute(self, expr, chase: bool = True):
        if isinstance(expr, Var) and chase and expr.name in self.defs:
            return self.substitute(self.defs[expr.name], chase=False)
        if isinstance(expr, TempRef) and expr.name in self.sites:
            _, site = self.sites[expr.name]
            if site.is_builtin:
                return Call(name=site.name, args=[self.substitute(a, chase=False) for a in site.args], span=expr.span)
            return expr
        if isinstance(expr, Binary):
            return Binary(op=expr.op, left=self.substitute(expr.left, chase),
                          right=self.substitute(expr.right, chase), span=expr.span)
        if isinstance(expr, Unary):
            return Unary(op=expr.op, operand=self.substitute(expr.operand, chase), span=expr.span)
        if isinstance(expr, FieldRef) and expr.target is not None:
            return FieldRef(owner=expr.owner, name=expr.name, is_static=expr.is_static,
                            target=self.substitute(expr.target, chase), span=expr.span)
        return expr


def collect_dependencies(cfg: Cfg, path: CfgPath, facts: TypeFacts) -> PathDependencies:
    nodes = cfg.node_map()
    outcomes = {ob.node: ob.outcome for ob in path.obligations}
    scan = _PathScan()
    variables: Dict[str, DependentVariable] = {}
    returns: Dict[str, List[Optional[ReturnConstraint]]] = {}

    for nid in path.node_ids:
        node = nodes[nid]
        if node.kind == NodeKind.STATEMENT:
            stmt = node.statement
            if isinstance(stmt, VarDecl):
                if stmt.init is not None:
                    scan.defs[stmt.name] = stmt.init
                else:
                    scan.defs.pop(stmt.name, None)
            elif isinstance(stmt, Assign) and isinstance(stmt.target, Var):
                scan.defs[stmt.target.name] = stmt.value
        elif node.kind == NodeKind.CALL:
            scan.sites[node.call.result] = (nid, node.call)
        elif node.kind == NodeKind.BRANCH and nid in outcomes:
            guard = scan.substitute(node.guard)
            for part in walk_expr(guard):
                if isinstance(part, FieldRef) and part.qualified not in variables:
                    fact = facts.field(part.owner, part.name)
                    variables[part.qualified] = DependentVariable(
                        field=part.qualified, owner=fact.owner, name=fact.name, access=fact.access,
                        is_static=fact.is_static, declared_type=fact.declared_type,
                    )
                elif isinstance(part, TempRef) and part.name in scan.sites:
                    call_node, _ = scan.sites[part.name]
                    returns.setdefault(call_node, []).append(return_shape(guard, part.name, outcomes[nid]))

    calls: List[DependentCall] = []
    for nid in path.node_ids:
        if nid not in returns:
            continue
        site = nodes[nid].call
        calls.append(DependentCall(
            node=nid, callee=site.callee, name=site.name, dispatch=site.dispatch,
            method_id=site.method_id, owner=site.owner, receiver_type=site.receiver_type,
            receiver_is_this=isinstance(site.receiver, This),
            required_return=combine_returns(returns[nid]),
        ))
    return PathDependencies(variables=list(variables.values()), calls=calls)
