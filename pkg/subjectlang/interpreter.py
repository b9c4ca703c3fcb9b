"""Tree-walking interpreter with branch/statement instrumentation.

Runtime faults of the subject program never escape as Python errors from
``execute``: they become exception events at the end of the trace.
"""

import itertools
import logging
from typing import Any, Dict, List, Optional, Tuple

from config.settings import settings
from models.errors import NotFoundError
from models.syntax import (
    TYPE_DEFAULTS, Assign, Binary, BoolLit, Call, CharLit, ExprStmt, FieldAccess, FieldDecl,
    If, IntLit, MethodCall, MethodDecl, New, ReflectCall, ReflectSet, Return, Span,
    StringLit, This, Unary, Var, VarDecl, While,
)
from models.trace import EventKind, ExecutionTrace, TraceEvent, TraceOutcome, branch_key, focal_reached
from subjectlang.checker import SemanticModel
from subjectlang.dispatch import resolve_dispatch

logger = logging.getLogger(__name__)

STEP_BUDGET_EXCEEDED = "STEP_BUDGET_EXCEEDED"
DIVISION_BY_ZERO = "DIVISION_BY_ZERO"
INDEX_OUT_OF_BOUNDS = "INDEX_OUT_OF_BOUNDS"
NULL_RECEIVER = "NULL_RECEIVER"
STACK_OVERFLOW = "STACK_OVERFLOW"


class SubjectFault(Exception):
    """A runtime fault raised by the subject program."""

    def __init__(self, kind: str, message: str, span: Optional[Span] = None):
        super().__init__(f"{kind}: {message}")
        self.kind = kind
        self.message = message
        self.span = span


class Obj:
    __slots__ = ("cls", "fields")

    def __init__(self, cls: str, fields: Dict[Tuple[str, str], Any]):
        self.cls = cls
        self.fields = fields

    def __repr__(self) -> str:
        return f"<{self.cls}>"


class _Frame:
    __slots__ = ("method_id", "frame_id", "this", "locals")

    def __init__(self, method_id: str, frame_id: int, this: Optional[Obj], local_vars: Dict[str, Any]):
        self.method_id = method_id
        self.frame_id = frame_id
        self.this = this
        self.locals = local_vars


def constant_value(expr) -> Any:
    """Value of a field initializer (a literal, or a negated int literal)."""
    if isinstance(expr, (IntLit, BoolLit, CharLit, StringLit)):
        return expr.value
    if isinstance(expr, Unary) and expr.op == "-" and isinstance(expr.operand, IntLit):
        return -expr.operand.value
    raise ValueError("not a constant")


def field_initial_value(fdecl: FieldDecl) -> Any:
    if fdecl.initializer is not None:
        return constant_value(fdecl.initializer)
    return TYPE_DEFAULTS[fdecl.declared_type]


def truncating_div(a: int, b: int) -> int:
    quotient = abs(a) // abs(b)
    return quotient if (a >= 0) == (b >= 0) else -quotient


class Interpreter:
    """One interpreter per execution; state is never shared between runs."""

    def __init__(
        self,
        model: SemanticModel,
        step_budget: Optional[int] = None,
        call_depth_limit: Optional[int] = None,
        record_statements: bool = True,
    ):
        self.model = model
        self.step_budget = step_budget if step_budget is not None else settings.STEP_BUDGET
        self.call_depth_limit = call_depth_limit if call_depth_limit is not None else settings.CALL_DEPTH_LIMIT
        self.record_statements = record_statements
        self.events: List[tuple] = []
        self.steps = 0
        self.depth = 0
        self._frame_ids = itertools.count(1)
        self._dispatch_cache: Dict[Tuple[str, str], MethodDecl] = {}
        self.statics: Dict[Tuple[str, str], Any] = {}
        for cls in model.classes.values():
            for fdecl in cls.fields:
                if fdecl.is_static:
                    self.statics[(cls.name, fdecl.name)] = field_initial_value(fdecl)
        self._eval_table = {
            IntLit: self._literal, BoolLit: self._literal, CharLit: self._literal,
            StringLit: self._literal, Var: self._var, This: self._this,
            FieldAccess: self._field_access, Call: self._call, MethodCall: self._method_call,
            New: self._new, Unary: self._unary, Binary: self._binary, ReflectCall: self._reflect_call,
        }

    # -- public API --------------------------------------------------------

    def new_object(self, class_name: str) -> Obj:
        fields: Dict[Tuple[str, str], Any] = {}
        for owner in self.model.chain(class_name):
            for fdecl in self.model.classes[owner].fields:
                if not fdecl.is_static:
                    fields[(owner, fdecl.name)] = field_initial_value(fdecl)
        return Obj(class_name, fields)

    def set_field(self, fdecl: FieldDecl, value: Any, receiver: Optional[Obj] = None) -> None:
        if fdecl.is_static:
            self.statics[(fdecl.owner, fdecl.name)] = value
        else:
            receiver.fields[(fdecl.owner, fdecl.name)] = value

    def invoke(self, method: MethodDecl, receiver: Optional[Obj], args: List[Any],
               span: Optional[Span] = None) -> Any:
        if self.depth >= self.call_depth_limit:
            raise SubjectFault(STACK_OVERFLOW, f"call depth exceeded {self.call_depth_limit}", span)
        frame = _Frame(method.method_id, next(self._frame_ids), receiver,
                       {p.name: a for p, a in zip(method.params, args)})
        self.events.append((EventKind.ENTER, method.method_id, frame.frame_id, method.span, None, None))
        self.depth += 1
        try:
            _, value = self._block(method.body or [], frame)
        finally:
            self.depth -= 1
        return value

    def dispatch(self, runtime_class: str, method: MethodDecl) -> MethodDecl:
        key = (runtime_class, method.signature)
        target = self._dispatch_cache.get(key)
        if target is None:
            target = resolve_dispatch(runtime_class, method.signature, self.model)
            self._dispatch_cache[key] = target
        return target

    def trace(self, entry: str, focal: Optional[str], fault: Optional[SubjectFault]) -> ExecutionTrace:
        events = [
            TraceEvent.model_construct(
                kind=kind, method=method_id, frame=frame_id, span=span,
                branch=extra if kind == EventKind.BRANCH else None,
                outcome=outcome if kind == EventKind.BRANCH else None,
                exception_kind=None, message=None,
            )
            for kind, method_id, frame_id, span, extra, outcome in self.events
        ]
        outcome = TraceOutcome.COMPLETED
        if fault is not None:
            events.append(TraceEvent(
                kind=EventKind.EXCEPTION, method="", frame=0, span=fault.span,
                exception_kind=fault.kind, message=fault.message,
            ))
            outcome = TraceOutcome.UNCAUGHT
        return ExecutionTrace(
            events=events, entry=entry, focal=focal,
            focal_reached=focal_reached(events, focal), outcome=outcome,
        )

    def branch_events(self, frame_id: Optional[int] = None) -> List[Tuple[str, bool]]:
        return [
            (extra, outcome) for kind, _, fid, _, extra, outcome in self.events
            if kind == EventKind.BRANCH and (frame_id is None or fid == frame_id)
        ]

    def first_frame_of(self, method_id: str) -> Optional[int]:
        for kind, mid, fid, *_ in self.events:
            if kind == EventKind.ENTER and mid == method_id:
                return fid
        return None

    # -- statements --------------------------------------------------------

    def _tick(self, span: Span) -> None:
        self.steps += 1
        if self.steps > self.step_budget:
            raise SubjectFault(STEP_BUDGET_EXCEEDED, f"more than {self.step_budget} steps", span)

    def _block(self, stmts, frame: _Frame) -> Tuple[bool, Any]:
        for stmt in stmts:
            self._tick(stmt.span)
            if self.record_statements:
                self.events.append((EventKind.STATEMENT, frame.method_id, frame.frame_id, stmt.span, None, None))
            kind = type(stmt)
            if kind is VarDecl:
                if stmt.init is not None:
                    frame.locals[stmt.name] = self._eval(stmt.init, frame)
                else:
                    frame.locals[stmt.name] = TYPE_DEFAULTS.get(stmt.type_name)
            elif kind is Assign:
                self._assign(stmt, frame)
            elif kind is If:
                if self._condition(stmt.cond, frame):
                    done, value = self._block(stmt.then_body, frame)
                elif stmt.else_body is not None:
                    done, value = self._block(stmt.else_body, frame)
                else:
                    continue
                if done:
                    return True, value
            elif kind is While:
                while self._condition(stmt.cond, frame):
                    done, value = self._block(stmt.body, frame)
                    if done:
                        return True, value
                    self._tick(stmt.span)
            elif kind is Return:
                return True, (self._eval(stmt.value, frame) if stmt.value is not None else None)
            elif kind is ExprStmt:
                self._eval(stmt.expr, frame)
            elif kind is ReflectSet:
                self._reflect_set(stmt, frame)
        return False, None

    def _assign(self, stmt: Assign, frame: _Frame) -> None:
        value = self._eval(stmt.value, frame)
        target = stmt.target
        if isinstance(target, Var):
            kind, fdecl = self.model.name_kinds[id(target)]
            if kind == "local":
                frame.locals[target.name] = value
            else:
                self.set_field(fdecl, value, frame.this)
            return
        fdecl = self.model.field_targets[id(target)]
        if fdecl.is_static:
            self.statics[(fdecl.owner, fdecl.name)] = value
            return
        receiver = self._eval(target.target, frame)
        if receiver is None:
            raise SubjectFault(NULL_RECEIVER, f"write to {fdecl.name} through null", target.span)
        receiver.fields[(fdecl.owner, fdecl.name)] = value

    def _reflect_set(self, stmt: ReflectSet, frame: _Frame) -> None:
        fdecl = self.model.field_targets[id(stmt)]
        value = self._eval(stmt.value, frame)
        if fdecl.is_static:
            self.statics[(fdecl.owner, fdecl.name)] = value
            return
        receiver = frame.locals.get(stmt.receiver)
        if receiver is None:
            raise SubjectFault(NULL_RECEIVER, f"reflect set on null {stmt.receiver}", stmt.span)
        receiver.fields[(fdecl.owner, fdecl.name)] = value

    def _condition(self, expr, frame: _Frame) -> bool:
        if isinstance(expr, Binary) and expr.op == "&&":
            return self._condition(expr.left, frame) and self._condition(expr.right, frame)
        if isinstance(expr, Binary) and expr.op == "||":
            return self._condition(expr.left, frame) or self._condition(expr.right, frame)
        if isinstance(expr, Unary) and expr.op == "!":
            return not self._condition(expr.operand, frame)
        value = self._eval(expr, frame)
        self.events.append((EventKind.BRANCH, frame.method_id, frame.frame_id, expr.span,
                            branch_key(frame.method_id, expr.span), value))
        return value

    # -- expressions -------------------------------------------------------

    def _eval(self, expr, frame: _Frame) -> Any:
        return self._eval_table[type(expr)](expr, frame)

    def _literal(self, expr, frame: _Frame) -> Any:
        return expr.value

    def _this(self, expr, frame: _Frame) -> Any:
        return frame.this

    def _var(self, expr: Var, frame: _Frame) -> Any:
        kind, fdecl = self.model.name_kinds[id(expr)]
        if kind == "local":
            return frame.locals[expr.name]
        if fdecl.is_static:
            return self.statics[(fdecl.owner, fdecl.name)]
        return frame.this.fields[(fdecl.owner, fdecl.name)]

    def _field_access(self, expr: FieldAccess, frame: _Frame) -> Any:
        fdecl = self.model.field_targets[id(expr)]
        if fdecl.is_static:
            return self.statics[(fdecl.owner, fdecl.name)]
        receiver = self._eval(expr.target, frame)
        if receiver is None:
            raise SubjectFault(NULL_RECEIVER, f"read of {fdecl.name} through null", expr.span)
        return receiver.fields[(fdecl.owner, fdecl.name)]

    def _new(self, expr: New, frame: _Frame) -> Any:
        return self.new_object(expr.class_name)

    def _unary(self, expr: Unary, frame: _Frame) -> Any:
        value = self._eval(expr.operand, frame)
        return (not value) if expr.op == "!" else -value

    def _binary(self, expr: Binary, frame: _Frame) -> Any:
        op = expr.op
        if op == "&&":
            return self._eval(expr.left, frame) and self._eval(expr.right, frame)
        if op == "||":
            return self._eval(expr.left, frame) or self._eval(expr.right, frame)
        left = self._eval(expr.left, frame)
        right = self._eval(expr.right, frame)
        if op == "+":
            return left + right
        if op == "-":
            return left - right
        if op == "*":
            return left * right
        if op in ("/", "%"):
            if right == 0:
                raise SubjectFault(DIVISION_BY_ZERO, "division by zero", expr.span)
            quotient = truncating_div(left, right)
            return quotient if op == "/" else left - right * quotient
        if op == "==":
            return left is right if isinstance(left, Obj) or isinstance(right, Obj) else left == right
        if op == "!=":
            return left is not right if isinstance(left, Obj) or isinstance(right, Obj) else left != right
        if op == "<":
            return left < right
        if op == "<=":
            return left <= right
        if op == ">":
            return left > right
        return left >= right

    def _args(self, args, frame: _Frame) -> List[Any]:
        return [self._eval(a, frame) for a in args]

    def _call(self, expr: Call, frame: _Frame) -> Any:
        target = self.model.call_targets[id(expr)]
        args = self._args(expr.args, frame)
        if target.kind == "builtin":
            return evaluate_builtin(expr.name, args, expr.span)
        self._tick(expr.span)
        if target.kind == "static":
            return self.invoke(target.method, None, args, expr.span)
        receiver = frame.this
        method = target.method if target.kind == "special" else self.dispatch(receiver.cls, target.method)
        return self.invoke(method, receiver, args, expr.span)

    def _method_call(self, expr: MethodCall, frame: _Frame) -> Any:
        target = self.model.call_targets[id(expr)]
        if target.kind == "static":
            if self.model.name_kinds.get(id(expr.target), ("",))[0] != "class":
                self._eval(expr.target, frame)
            args = self._args(expr.args, frame)
            self._tick(expr.span)
            return self.invoke(target.method, None, args, expr.span)
        receiver = self._eval(expr.target, frame)
        args = self._args(expr.args, frame)
        if receiver is None:
            raise SubjectFault(NULL_RECEIVER, f"call of {expr.name} on null", expr.span)
        self._tick(expr.span)
        method = target.method if target.kind == "special" else self.dispatch(receiver.cls, target.method)
        return self.invoke(method, receiver, args, expr.span)

    def _reflect_call(self, expr: ReflectCall, frame: _Frame) -> Any:
        target = self.model.call_targets[id(expr)]
        args = self._args(expr.args, frame)
        self._tick(expr.span)
        if target.kind == "static":
            return self.invoke(target.method, None, args, expr.span)
        receiver = frame.locals.get(expr.receiver)
        if receiver is None:
            raise SubjectFault(NULL_RECEIVER, f"reflect call of {expr.method} on null {expr.receiver}", expr.span)
        method = target.method if target.kind == "special" else self.dispatch(receiver.cls, target.method)
        return self.invoke(method, receiver, args, expr.span)


def evaluate_builtin(name: str, args: List[Any], span: Optional[Span] = None) -> Any:
    if name == "length":
        return len(args[0])
    if name == "charAt":
        text, index = args
        if not 0 <= index < len(text):
            raise SubjectFault(INDEX_OUT_OF_BOUNDS, f"charAt index {index} for length {len(text)}", span)
        return text[index]
    if name == "indexOf":
        return args[0].find(args[1])
    if name == "substring":
        text, lo, hi = args
        if not 0 <= lo <= hi <= len(text):
            raise SubjectFault(INDEX_OUT_OF_BOUNDS, f"substring({lo}, {hi}) for length {len(text)}", span)
        return text[lo:hi]
    return args[0] + args[1]


def run_guarded(interpreter: Interpreter, method: MethodDecl, receiver: Optional[Obj],
                args: List[Any]) -> Tuple[Any, Optional[SubjectFault]]:
    """Invoke and convert faults (including host recursion limits) into a value."""
    try:
        return interpreter.invoke(method, receiver, args), None
    except SubjectFault as fault:
        return None, fault
    except RecursionError:
        return None, SubjectFault(STACK_OVERFLOW, "host recursion limit reached", method.span)


def execute(model: SemanticModel, entry: str, focal: Optional[str] = None,
            step_budget: Optional[int] = None, call_depth_limit: Optional[int] = None) -> ExecutionTrace:
    """Run the public static zero-parameter ``entry`` method and return its trace."""
    method = model.methods.get(entry)
    if method is None:
        raise NotFoundError(f"entry method {entry} not found", detail={"entry": entry})
    if not method.is_static or method.params:
        raise NotFoundError(f"entry method {entry} must be static with no parameters", detail={"entry": entry})
    interpreter = Interpreter(model, step_budget=step_budget, call_depth_limit=call_depth_limit)
    _, fault = run_guarded(interpreter, method, None, [])
    trace = interpreter.trace(entry, focal, fault)
    logger.debug("executed %s: %d event(s), outcome=%s", entry, len(trace.events), trace.outcome.value)
    return trace
