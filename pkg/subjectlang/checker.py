"""Static semantics for the subject language.

``analyze`` type-checks a project and returns a SemanticModel that records,
per expression node, its static type and what each name or call resolves to.
The interpreter and the CFG builder both read those annotations instead of
re-resolving names. ``check`` is the diagnostics-only view.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from models.syntax import (
    BUILTINS, PRIMITIVE_TYPES, VOID, Access, Assign, Binary, BoolLit, Call, CharLit,
    ClassDecl, Diagnostic, ExprStmt, FieldAccess, FieldDecl, If, IntLit, MethodCall,
    MethodDecl, New, ReflectCall, ReflectSet, Return, Severity, SourceUnit, Span,
    StringLit, This, Unary, Var, VarDecl, While, signature_of,
)

logger = logging.getLogger(__name__)

ARITHMETIC = {"+", "-", "*", "/", "%"}
RELATIONAL = {"<", "<=", ">", ">="}
EQUALITY = {"==", "!="}
LOGICAL = {"&&", "||"}


@dataclass(frozen=True)
class CallTarget:
    """What a call site resolves to.

    kind is one of: builtin, static, virtual (dispatch on the receiver's runtime
    class) or special (private instance method, invoked without dispatch).
    """

    kind: str
    name: str
    method: Optional[MethodDecl] = None

    @property
    def signature(self) -> str:
        if self.method is not None:
            return self.method.signature
        return signature_of(self.name, list(BUILTINS[self.name][0]))


@dataclass
class SemanticModel:
    units: List[SourceUnit]
    classes: Dict[str, ClassDecl] = field(default_factory=dict)
    class_paths: Dict[str, str] = field(default_factory=dict)
    methods: Dict[str, MethodDecl] = field(default_factory=dict)
    diagnostics: List[Diagnostic] = field(default_factory=list)
    expr_types: Dict[int, str] = field(default_factory=dict)
    name_kinds: Dict[int, Tuple[str, object]] = field(default_factory=dict)
    call_targets: Dict[int, CallTarget] = field(default_factory=dict)
    field_targets: Dict[int, FieldDecl] = field(default_factory=dict)
    superclasses: Dict[str, Optional[str]] = field(default_factory=dict)

    # -- hierarchy ---------------------------------------------------------

    def superclass_of(self, class_name: str) -> Optional[str]:
        return self.superclasses.get(class_name)

    def declared_method(self, class_name: str, signature: str) -> Optional[MethodDecl]:
        cls = self.classes.get(class_name)
        if cls is None:
            return None
        for method in cls.methods:
            if method.signature == signature:
                return method
        return None

    def chain(self, class_name: str) -> List[str]:
        out: List[str] = []
        current: Optional[str] = class_name
        while current is not None and current in self.classes and current not in out:
            out.append(current)
            current = self.superclasses.get(current)
        return out

    def is_subclass(self, sub: str, sup: str) -> bool:
        return sup in self.chain(sub)

    def lookup_field(self, class_name: str, name: str) -> Optional[FieldDecl]:
        for owner in self.chain(class_name):
            for candidate in self.classes[owner].fields:
                if candidate.name == name:
                    return candidate
        return None

    def methods_named(self, class_name: str, name: str) -> List[MethodDecl]:
        found: Dict[str, MethodDecl] = {}
        for owner in self.chain(class_name):
            for method in self.classes[owner].methods:
                if method.name == name and method.signature not in found:
                    found[method.signature] = method
        return list(found.values())

    def concrete_subclasses(self, class_name: str) -> List[str]:
        return sorted(
            name for name, cls in self.classes.items()
            if not cls.is_abstract and name != class_name and self.is_subclass(name, class_name)
        )

    def method(self, method_id: str) -> MethodDecl:
        return self.methods[method_id]

    def type_of(self, expr) -> Optional[str]:
        return self.expr_types.get(id(expr))

    @property
    def ok(self) -> bool:
        return not any(d.severity == Severity.ERROR for d in self.diagnostics)


@dataclass
class _Context:
    cls: ClassDecl
    method: MethodDecl
    path: str
    scopes: List[Dict[str, str]]

    @property
    def is_static(self) -> bool:
        return self.method.is_static

    def lookup_local(self, name: str) -> Optional[str]:
        for scope in reversed(self.scopes):
            if name in scope:
                return scope[name]
        return None


class _Checker:
    def __init__(self, units: List[SourceUnit]):
        self.model = SemanticModel(units=list(units))
        self._path = ""

    # -- diagnostics -------------------------------------------------------

    def _error(self, span: Span, code: str, message: str, path: Optional[str] = None) -> None:
        self.model.diagnostics.append(
            Diagnostic(severity=Severity.ERROR, span=span, code=code, message=message, path=path or self._path)
        )

    # -- declarations ------------------------------------------------------

    def run(self) -> SemanticModel:
        self._collect_classes()
        self._resolve_superclasses()
        for name, cls in self.model.classes.items():
            self._path = self.model.class_paths[name]
            self._check_members(cls)
        for name, cls in self.model.classes.items():
            self._path = self.model.class_paths[name]
            self._check_overrides(cls)
            self._check_abstract_coverage(cls)
        for name, cls in self.model.classes.items():
            self._path = self.model.class_paths[name]
            for fdecl in cls.fields:
                self._check_field_initializer(fdecl)
            for method in cls.methods:
                self._check_body(cls, method)
        self.model.diagnostics.sort(key=Diagnostic.sort_key)
        return self.model

    def _collect_classes(self) -> None:
        for unit in self.model.units:
            self._path = unit.path
            for cls in unit.classes:
                if cls.name in self.model.classes:
                    self._error(cls.span, "DUPLICATE_NAME", f"class {cls.name} is declared more than once")
                    continue
                if cls.name in BUILTINS:
                    self._error(cls.span, "RESERVED_NAME", f"{cls.name} is a built-in name")
                self.model.classes[cls.name] = cls
                self.model.class_paths[cls.name] = unit.path

    def _resolve_superclasses(self) -> None:
        for name, cls in self.model.classes.items():
            self._path = self.model.class_paths[name]
            parent = cls.superclass
            if parent is not None and parent not in self.model.classes:
                self._error(cls.span, "UNKNOWN_NAME", f"unknown superclass {parent}")
                parent = None
            self.model.superclasses[name] = parent
        cyclic = []
        for name, cls in self.model.classes.items():
            seen: List[str] = []
            current: Optional[str] = name
            while current is not None and current not in seen:
                seen.append(current)
                current = self.model.superclasses.get(current)
            if current == name:
                cyclic.append(name)
                self._path = self.model.class_paths[name]
                self._error(cls.span, "INHERITANCE_CYCLE", f"class {name} inherits from itself")
        for name in cyclic:
            self.model.superclasses[name] = None

    def _check_members(self, cls: ClassDecl) -> None:
        field_names = set()
        for fdecl in cls.fields:
            if fdecl.name in field_names:
                self._error(fdecl.span, "DUPLICATE_NAME", f"field {fdecl.name} is declared more than once")
            field_names.add(fdecl.name)
            if fdecl.declared_type not in PRIMITIVE_TYPES:
                self._error(fdecl.span, "TYPE_MISMATCH", f"field type must be one of {', '.join(PRIMITIVE_TYPES)}")
        signatures = set()
        for method in cls.methods:
            if method.signature in signatures:
                self._error(method.span, "DUPLICATE_NAME", f"method {method.signature} is declared more than once")
            else:
                self.model.methods[method.method_id] = method
            signatures.add(method.signature)
            if method.name in BUILTINS:
                self._error(method.span, "RESERVED_NAME", f"{method.name} is a built-in name")
            if method.return_type not in PRIMITIVE_TYPES and method.return_type != VOID:
                self._error(method.span, "TYPE_MISMATCH", f"unsupported return type {method.return_type}")
            params = set()
            for param in method.params:
                if param.name in params:
                    self._error(param.span, "DUPLICATE_NAME", f"parameter {param.name} is declared more than once")
                params.add(param.name)
                if param.type_name not in PRIMITIVE_TYPES:
                    self._error(param.span, "TYPE_MISMATCH", f"unsupported parameter type {param.type_name}")
            if method.is_abstract:
                if not cls.is_abstract:
                    self._error(method.span, "ABSTRACT_IN_CONCRETE",
                                f"abstract method {method.name} in concrete class {cls.name}")
                if method.body is not None:
                    self._error(method.span, "INVALID_MODIFIER", "abstract method cannot have a body")
                if method.is_static or method.access == Access.PRIVATE:
                    self._error(method.span, "INVALID_MODIFIER", "abstract method must be public and non-static")
            elif method.body is None:
                self._error(method.span, "INVALID_MODIFIER", f"method {method.name} needs a body")

    def _check_overrides(self, cls: ClassDecl) -> None:
        parent = self.model.superclasses.get(cls.name)
        if parent is None:
            return
        for method in cls.methods:
            for inherited in self.model.methods_named(parent, method.name):
                if inherited.signature != method.signature or inherited.access == Access.PRIVATE:
                    continue
                if (inherited.return_type != method.return_type
                        or inherited.is_static != method.is_static
                        or method.access == Access.PRIVATE):
                    self._error(method.span, "OVERRIDE_MISMATCH",
                                f"{method.signature} does not match the inherited declaration in {inherited.owner}")

    def _check_abstract_coverage(self, cls: ClassDecl) -> None:
        if cls.is_abstract:
            return
        implemented = set()
        missing: Dict[str, MethodDecl] = {}
        for owner in self.model.chain(cls.name):
            for method in self.model.classes[owner].methods:
                if method.is_abstract:
                    if method.signature not in implemented:
                        missing.setdefault(method.signature, method)
                else:
                    implemented.add(method.signature)
        for signature in sorted(missing):
            self._error(cls.span, "UNIMPLEMENTED_ABSTRACT",
                        f"{cls.name} does not implement {missing[signature].owner}.{signature}")

    def _check_field_initializer(self, fdecl: FieldDecl) -> None:
        init = fdecl.initializer
        if init is None:
            return
        literal = init
        if isinstance(init, Unary) and init.op == "-" and isinstance(init.operand, IntLit):
            literal = init.operand
        if not isinstance(literal, (IntLit, BoolLit, CharLit, StringLit)):
            self._error(init.span, "TYPE_MISMATCH", f"initializer of {fdecl.name} must be a constant")
            return
        found = _literal_type(literal)
        self.model.expr_types[id(init)] = found
        self.model.expr_types[id(literal)] = found
        if found != fdecl.declared_type:
            self._error(init.span, "TYPE_MISMATCH",
                        f"field {fdecl.name} is {fdecl.declared_type} but initializer is {found}")

    # -- bodies ------------------------------------------------------------

    def _check_body(self, cls: ClassDecl, method: MethodDecl) -> None:
        if method.body is None:
            return
        ctx = _Context(cls=cls, method=method, path=self._path,
                       scopes=[{p.name: p.type_name for p in method.params}])
        self._stmts(method.body, ctx)
        if method.return_type != VOID and not definitely_returns(method.body):
            self._error(method.span, "MISSING_RETURN", f"{method.name} may finish without returning a value")

    def _stmts(self, stmts: Iterable, ctx: _Context) -> None:
        for stmt in stmts:
            self._stmt(stmt, ctx)

    def _block(self, stmts, ctx: _Context) -> None:
        ctx.scopes.append({})
        try:
            self._stmts(stmts, ctx)
        finally:
            ctx.scopes.pop()

    def _stmt(self, stmt, ctx: _Context) -> None:
        if isinstance(stmt, VarDecl):
            self._var_decl(stmt, ctx)
        elif isinstance(stmt, Assign):
            self._assign(stmt, ctx)
        elif isinstance(stmt, If):
            self._condition(stmt.cond, ctx)
            self._block(stmt.then_body, ctx)
            if stmt.else_body is not None:
                self._block(stmt.else_body, ctx)
        elif isinstance(stmt, While):
            self._condition(stmt.cond, ctx)
            self._block(stmt.body, ctx)
        elif isinstance(stmt, Return):
            self._return(stmt, ctx)
        elif isinstance(stmt, ExprStmt):
            if not isinstance(stmt.expr, (Call, MethodCall, ReflectCall)):
                self._error(stmt.span, "TYPE_MISMATCH", "only calls may be used as statements")
            self._expr(stmt.expr, ctx)
        elif isinstance(stmt, ReflectSet):
            self._reflect_set(stmt, ctx)

    def _var_decl(self, stmt: VarDecl, ctx: _Context) -> None:
        declared = stmt.type_name
        if declared == VOID:
            self._error(stmt.span, "TYPE_MISMATCH", "variables cannot be void")
        elif declared not in PRIMITIVE_TYPES and declared not in self.model.classes:
            self._error(stmt.span, "UNKNOWN_NAME", f"unknown type {declared}")
        if ctx.lookup_local(stmt.name) is not None:
            self._error(stmt.span, "DUPLICATE_NAME", f"variable {stmt.name} is already defined")
        if stmt.init is not None:
            found = self._expr(stmt.init, ctx)
            if found is not None and not self._assignable(found, declared):
                self._error(stmt.init.span, "TYPE_MISMATCH", f"cannot assign {found} to {declared}")
        ctx.scopes[-1][stmt.name] = declared

    def _assign(self, stmt: Assign, ctx: _Context) -> None:
        target = stmt.target
        if not isinstance(target, (Var, FieldAccess)):
            self._error(target.span, "TYPE_MISMATCH", "left side of assignment is not assignable")
            self._expr(stmt.value, ctx)
            return
        target_type = self._expr(target, ctx)
        found = self._expr(stmt.value, ctx)
        if target_type is not None and found is not None and not self._assignable(found, target_type):
            self._error(stmt.value.span, "TYPE_MISMATCH", f"cannot assign {found} to {target_type}")

    def _condition(self, cond, ctx: _Context) -> None:
        found = self._expr(cond, ctx)
        if found is not None and found != "bool":
            self._error(cond.span, "TYPE_MISMATCH", f"condition must be bool, found {found}")

    def _return(self, stmt: Return, ctx: _Context) -> None:
        expected = ctx.method.return_type
        if stmt.value is None:
            if expected != VOID:
                self._error(stmt.span, "TYPE_MISMATCH", f"missing return value of type {expected}")
            return
        found = self._expr(stmt.value, ctx)
        if expected == VOID:
            self._error(stmt.span, "TYPE_MISMATCH", "void method cannot return a value")
        elif found is not None and not self._assignable(found, expected):
            self._error(stmt.value.span, "TYPE_MISMATCH", f"expected {expected}, found {found}")

    def _reflect_set(self, stmt: ReflectSet, ctx: _Context) -> None:
        found = self._expr(stmt.value, ctx)
        if stmt.class_name not in self.model.classes:
            self._error(stmt.span, "UNKNOWN_NAME", f"unknown class {stmt.class_name}")
            return
        fdecl = self.model.lookup_field(stmt.class_name, stmt.field)
        if fdecl is None:
            self._error(stmt.span, "UNKNOWN_NAME", f"{stmt.class_name} has no field {stmt.field}")
            return
        self.model.field_targets[id(stmt)] = fdecl
        self._check_reflect_receiver(stmt.receiver, stmt.class_name, fdecl.is_static, stmt.span, ctx)
        if found is not None and not self._assignable(found, fdecl.declared_type):
            self._error(stmt.value.span, "TYPE_MISMATCH", f"cannot assign {found} to {fdecl.declared_type}")

    def _check_reflect_receiver(self, receiver, class_name, is_static, span, ctx) -> None:
        if is_static:
            if receiver is not None:
                self._error(span, "STATIC_CONTEXT", "static members are reached without a receiver")
            return
        if receiver is None:
            self._error(span, "STATIC_CONTEXT", "instance members need a receiver")
            return
        receiver_type = ctx.lookup_local(receiver)
        if receiver_type is None:
            self._error(span, "UNKNOWN_NAME", f"unknown variable {receiver}")
        elif receiver_type not in self.model.classes or not self.model.is_subclass(receiver_type, class_name):
            self._error(span, "TYPE_MISMATCH", f"{receiver} is not a {class_name}")

    # -- expressions -------------------------------------------------------

    def _expr(self, expr, ctx: _Context) -> Optional[str]:
        found = self._infer(expr, ctx)
        if found is not None:
            self.model.expr_types[id(expr)] = found
        return found

    def _infer(self, expr, ctx: _Context) -> Optional[str]:
        if isinstance(expr, (IntLit, BoolLit, CharLit, StringLit)):
            return _literal_type(expr)
        if isinstance(expr, This):
            if ctx.is_static:
                self._error(expr.span, "STATIC_CONTEXT", "this is not available in a static method")
                return None
            return ctx.cls.name
        if isinstance(expr, Var):
            return self._var(expr, ctx)
        if isinstance(expr, FieldAccess):
            return self._field_access(expr, ctx)
        if isinstance(expr, Call):
            return self._call(expr, ctx)
        if isinstance(expr, MethodCall):
            return self._method_call(expr, ctx)
        if isinstance(expr, New):
            cls = self.model.classes.get(expr.class_name)
            if cls is None:
                self._error(expr.span, "UNKNOWN_NAME", f"unknown class {expr.class_name}")
                return None
            if cls.is_abstract:
                self._error(expr.span, "ABSTRACT_INSTANTIATION", f"cannot instantiate abstract class {cls.name}")
            return cls.name
        if isinstance(expr, Unary):
            return self._unary(expr, ctx)
        if isinstance(expr, Binary):
            return self._binary(expr, ctx)
        if isinstance(expr, ReflectCall):
            return self._reflect_call(expr, ctx)
        self._error(expr.span, "TYPE_MISMATCH", f"unexpected expression {type(expr).__name__}")
        return None

    def _var(self, expr: Var, ctx: _Context) -> Optional[str]:
        local = ctx.lookup_local(expr.name)
        if local is not None:
            self.model.name_kinds[id(expr)] = ("local", None)
            return local
        fdecl = self.model.lookup_field(ctx.cls.name, expr.name)
        if fdecl is not None:
            self.model.name_kinds[id(expr)] = ("field", fdecl)
            self._check_field_use(fdecl, expr.span, ctx)
            if not fdecl.is_static and ctx.is_static:
                self._error(expr.span, "STATIC_CONTEXT", f"instance field {expr.name} used in a static method")
            return fdecl.declared_type
        if expr.name in self.model.classes:
            self.model.name_kinds[id(expr)] = ("class", expr.name)
            self._error(expr.span, "TYPE_MISMATCH", f"{expr.name} is a class, not a value")
            return None
        self._error(expr.span, "UNKNOWN_NAME", f"unknown name {expr.name}")
        return None

    def _class_qualifier(self, target, ctx: _Context) -> Optional[str]:
        if (isinstance(target, Var) and ctx.lookup_local(target.name) is None
                and self.model.lookup_field(ctx.cls.name, target.name) is None
                and target.name in self.model.classes):
            self.model.name_kinds[id(target)] = ("class", target.name)
            return target.name
        return None

    def _check_field_use(self, fdecl: FieldDecl, span: Span, ctx: _Context) -> None:
        if fdecl.access == Access.PRIVATE and fdecl.owner != ctx.cls.name:
            self._error(span, "ACCESS_PRIVATE", f"{fdecl.owner}.{fdecl.name} is private")

    def _check_method_use(self, method: MethodDecl, span: Span, ctx: _Context) -> None:
        if method.access == Access.PRIVATE and method.owner != ctx.cls.name:
            self._error(span, "ACCESS_PRIVATE", f"{method.owner}.{method.name} is private")

    def _field_access(self, expr: FieldAccess, ctx: _Context) -> Optional[str]:
        qualifier = self._class_qualifier(expr.target, ctx)
        if qualifier is not None:
            fdecl = self.model.lookup_field(qualifier, expr.name)
            if fdecl is None:
                self._error(expr.span, "UNKNOWN_NAME", f"{qualifier} has no field {expr.name}")
                return None
            if not fdecl.is_static:
                self._error(expr.span, "STATIC_CONTEXT", f"{expr.name} is an instance field")
            self._check_field_use(fdecl, expr.span, ctx)
            self.model.field_targets[id(expr)] = fdecl
            return fdecl.declared_type
        owner = self._expr(expr.target, ctx)
        if owner is None:
            return None
        if owner not in self.model.classes:
            self._error(expr.span, "TYPE_MISMATCH", f"{owner} has no fields")
            return None
        fdecl = self.model.lookup_field(owner, expr.name)
        if fdecl is None:
            self._error(expr.span, "UNKNOWN_NAME", f"{owner} has no field {expr.name}")
            return None
        self._check_field_use(fdecl, expr.span, ctx)
        self.model.field_targets[id(expr)] = fdecl
        return fdecl.declared_type

    def _arg_types(self, args, ctx: _Context) -> Optional[List[str]]:
        types = [self._expr(a, ctx) for a in args]
        if any(t is None for t in types):
            return None
        return types

    def _pick_overload(self, candidates: List[MethodDecl], arg_types: List[str],
                       name: str, span: Span) -> Optional[MethodDecl]:
        if not candidates:
            self._error(span, "UNKNOWN_NAME", f"unknown method {name}")
            return None
        for method in candidates:
            if method.param_types == arg_types:
                return method
        for method in candidates:
            if len(method.params) == len(arg_types) and all(
                self._assignable(a, p) for a, p in zip(arg_types, method.param_types)
            ):
                return method
        if not any(len(m.params) == len(arg_types) for m in candidates):
            self._error(span, "ARITY_MISMATCH", f"{name} does not take {len(arg_types)} argument(s)")
        else:
            self._error(span, "TYPE_MISMATCH", f"no overload of {name} accepts ({', '.join(arg_types)})")
        return None

    @staticmethod
    def _call_kind(method: MethodDecl) -> str:
        if method.is_static:
            return "static"
        return "special" if method.access == Access.PRIVATE else "virtual"

    def _call(self, expr: Call, ctx: _Context) -> Optional[str]:
        arg_types = self._arg_types(expr.args, ctx)
        if expr.name in BUILTINS:
            params, result = BUILTINS[expr.name]
            self.model.call_targets[id(expr)] = CallTarget(kind="builtin", name=expr.name)
            if arg_types is None:
                return result
            if len(arg_types) != len(params):
                self._error(expr.span, "ARITY_MISMATCH", f"{expr.name} takes {len(params)} argument(s)")
            elif list(params) != arg_types:
                self._error(expr.span, "TYPE_MISMATCH", f"{expr.name} expects ({', '.join(params)})")
            return result
        if arg_types is None:
            return None
        method = self._pick_overload(self.model.methods_named(ctx.cls.name, expr.name), arg_types, expr.name, expr.span)
        if method is None:
            return None
        self._check_method_use(method, expr.span, ctx)
        if not method.is_static and ctx.is_static:
            self._error(expr.span, "STATIC_CONTEXT", f"instance method {expr.name} called from a static method")
        self.model.call_targets[id(expr)] = CallTarget(kind=self._call_kind(method), name=method.name, method=method)
        return method.return_type

    def _method_call(self, expr: MethodCall, ctx: _Context) -> Optional[str]:
        qualifier = self._class_qualifier(expr.target, ctx)
        receiver = qualifier
        if qualifier is None:
            receiver = self._expr(expr.target, ctx)
            if receiver is None:
                self._arg_types(expr.args, ctx)
                return None
            if receiver not in self.model.classes:
                self._error(expr.span, "TYPE_MISMATCH", f"{receiver} has no methods")
                self._arg_types(expr.args, ctx)
                return None
        arg_types = self._arg_types(expr.args, ctx)
        if arg_types is None:
            return None
        method = self._pick_overload(self.model.methods_named(receiver, expr.name), arg_types, expr.name, expr.span)
        if method is None:
            return None
        self._check_method_use(method, expr.span, ctx)
        if qualifier is not None and not method.is_static:
            self._error(expr.span, "STATIC_CONTEXT", f"{expr.name} is an instance method")
        self.model.call_targets[id(expr)] = CallTarget(kind=self._call_kind(method), name=method.name, method=method)
        return method.return_type

    def _reflect_call(self, expr: ReflectCall, ctx: _Context) -> Optional[str]:
        arg_types = self._arg_types(expr.args, ctx)
        if expr.class_name not in self.model.classes:
            self._error(expr.span, "UNKNOWN_NAME", f"unknown class {expr.class_name}")
            return None
        if arg_types is None:
            return None
        method = self._pick_overload(
            self.model.methods_named(expr.class_name, expr.method), arg_types, expr.method, expr.span
        )
        if method is None:
            return None
        self._check_reflect_receiver(expr.receiver, expr.class_name, method.is_static, expr.span, ctx)
        if method.is_abstract and expr.receiver is None:
            self._error(expr.span, "STATIC_CONTEXT", "abstract methods need a receiver")
        self.model.call_targets[id(expr)] = CallTarget(kind=self._call_kind(method), name=method.name, method=method)
        return method.return_type

    def _unary(self, expr: Unary, ctx: _Context) -> Optional[str]:
        operand = self._expr(expr.operand, ctx)
        if operand is None:
            return None
        expected = "bool" if expr.op == "!" else "int"
        if operand != expected:
            self._error(expr.span, "TYPE_MISMATCH", f"operator {expr.op} expects {expected}, found {operand}")
            return None
        return expected

    def _binary(self, expr: Binary, ctx: _Context) -> Optional[str]:
        left = self._expr(expr.left, ctx)
        right = self._expr(expr.right, ctx)
        if left is None or right is None:
            return None
        op = expr.op
        if op in ARITHMETIC:
            if left == right == "int":
                return "int"
            if op == "+" and left == right == "string":
                return "string"
        elif op in RELATIONAL:
            if left == right and left in ("int", "char"):
                return "bool"
        elif op in EQUALITY:
            if left == right or (left in self.model.classes and right in self.model.classes
                                 and (self.model.is_subclass(left, right) or self.model.is_subclass(right, left))):
                return "bool"
        elif op in LOGICAL:
            if left == right == "bool":
                return "bool"
        self._error(expr.span, "TYPE_MISMATCH", f"operator {op} cannot combine {left} and {right}")
        return None

    def _assignable(self, source: str, target: str) -> bool:
        if source == target:
            return True
        return source in self.model.classes and target in self.model.classes and self.model.is_subclass(source, target)


def _literal_type(literal) -> str:
    if isinstance(literal, IntLit):
        return "int"
    if isinstance(literal, BoolLit):
        return "bool"
    if isinstance(literal, CharLit):
        return "char"
    return "string"


def definitely_returns(stmts) -> bool:
    for stmt in stmts:
        if isinstance(stmt, Return):
            return True
        if isinstance(stmt, If) and stmt.else_body is not None:
            if definitely_returns(stmt.then_body) and definitely_returns(stmt.else_body):
                return True
    return False


def analyze(project: List[SourceUnit]) -> SemanticModel:
    model = _Checker(project).run()
    logger.debug("analyzed %d unit(s): %d class(es), %d diagnostic(s)",
                 len(project), len(model.classes), len(model.diagnostics))
    return model


def check(project: List[SourceUnit]) -> List[Diagnostic]:
    return analyze(project).diagnostics
