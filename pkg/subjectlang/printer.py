"""Canonical pretty-printer; its output is the normalization format for golden tests."""

from typing import List

from models.syntax import (
    Assign, Binary, BoolLit, Call, CharLit, ClassDecl, ExprStmt, FieldAccess, FieldDecl,
    FieldRef, If, IntLit, MethodCall, MethodDecl, New, ReflectCall, ReflectSet, Return,
    SourceUnit, StringLit, TempRef, This, Unary, Var, VarDecl, While,
)

INDENT = "    "

PRECEDENCE = {
    "||": 1, "&&": 2, "==": 3, "!=": 3, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5, "*": 6, "/": 6, "%": 6,
}
UNARY_PRECEDENCE = 7
POSTFIX_PRECEDENCE = 8

_ESCAPE_OUT = {"\n": "\\n", "\t": "\\t", "\r": "\\r", "\0": "\\0", "\\": "\\\\"}


def quote_char(value: str) -> str:
    if value == "'":
        return "'\\''"
    return "'" + _ESCAPE_OUT.get(value, value) + "'"


def quote_string(value: str) -> str:
    body = "".join('\\"' if ch == '"' else _ESCAPE_OUT.get(ch, ch) for ch in value)
    return '"' + body + '"'


def format_value(value, type_name: str) -> str:
    """Render a runtime scalar as a literal of the given subject type."""
    if type_name == "bool":
        return "true" if value else "false"
    if type_name == "char":
        return quote_char(value)
    if type_name == "string":
        return quote_string(value)
    return str(value)


def print_expr(expr, parent: int = 0) -> str:
    if isinstance(expr, IntLit):
        return str(expr.value)
    if isinstance(expr, BoolLit):
        return "true" if expr.value else "false"
    if isinstance(expr, CharLit):
        return quote_char(expr.value)
    if isinstance(expr, StringLit):
        return quote_string(expr.value)
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, This):
        return "this"
    if isinstance(expr, TempRef):
        return expr.name
    if isinstance(expr, New):
        return f"new {expr.class_name}()"
    if isinstance(expr, Call):
        return f"{expr.name}({_args(expr.args)})"
    if isinstance(expr, MethodCall):
        return f"{print_expr(expr.target, POSTFIX_PRECEDENCE)}.{expr.name}({_args(expr.args)})"
    if isinstance(expr, FieldAccess):
        return f"{print_expr(expr.target, POSTFIX_PRECEDENCE)}.{expr.name}"
    if isinstance(expr, FieldRef):
        if expr.target is not None:
            return f"{print_expr(expr.target, POSTFIX_PRECEDENCE)}.{expr.name}"
        return expr.qualified
    if isinstance(expr, ReflectCall):
        receiver = f"{expr.receiver}." if expr.receiver else ""
        return f"reflect call {receiver}{expr.class_name}#{expr.method}({_args(expr.args)})"
    if isinstance(expr, Unary):
        text = f"{expr.op}{print_expr(expr.operand, UNARY_PRECEDENCE)}"
        return f"({text})" if parent > UNARY_PRECEDENCE else text
    if isinstance(expr, Binary):
        prec = PRECEDENCE[expr.op]
        text = f"{print_expr(expr.left, prec)} {expr.op} {print_expr(expr.right, prec + 1)}"
        return f"({text})" if parent > prec else text
    raise TypeError(f"cannot print {type(expr).__name__}")


def _args(args) -> str:
    return ", ".join(print_expr(a) for a in args)


def print_stmt(stmt, depth: int = 0) -> List[str]:
    pad = INDENT * depth
    if isinstance(stmt, VarDecl):
        init = f" = {print_expr(stmt.init)}" if stmt.init is not None else ""
        return [f"{pad}{stmt.type_name} {stmt.name}{init};"]
    if isinstance(stmt, Assign):
        return [f"{pad}{print_expr(stmt.target)} = {print_expr(stmt.value)};"]
    if isinstance(stmt, ExprStmt):
        return [f"{pad}{print_expr(stmt.expr)};"]
    if isinstance(stmt, Return):
        if stmt.value is None:
            return [f"{pad}return;"]
        return [f"{pad}return {print_expr(stmt.value)};"]
    if isinstance(stmt, ReflectSet):
        receiver = f"{stmt.receiver}." if stmt.receiver else ""
        return [f"{pad}reflect set {receiver}{stmt.class_name}#{stmt.field} = {print_expr(stmt.value)};"]
    if isinstance(stmt, While):
        return [f"{pad}while ({print_expr(stmt.cond)}) {{", *print_block(stmt.body, depth + 1), f"{pad}}}"]
    if isinstance(stmt, If):
        return _print_if(stmt, depth, pad)
    raise TypeError(f"cannot print {type(stmt).__name__}")


def _print_if(stmt: If, depth: int, lead: str) -> List[str]:
    pad = INDENT * depth
    lines = [f"{lead}if ({print_expr(stmt.cond)}) {{", *print_block(stmt.then_body, depth + 1)]
    if stmt.else_body is None:
        lines.append(f"{pad}}}")
    elif len(stmt.else_body) == 1 and isinstance(stmt.else_body[0], If):
        chained = _print_if(stmt.else_body[0], depth, f"{pad}}} else ")
        lines.extend(chained)
    else:
        lines.append(f"{pad}}} else {{")
        lines.extend(print_block(stmt.else_body, depth + 1))
        lines.append(f"{pad}}}")
    return lines


def print_block(stmts, depth: int) -> List[str]:
    lines: List[str] = []
    for stmt in stmts:
        lines.extend(print_stmt(stmt, depth))
    return lines


def _modifiers(member) -> str:
    words = [member.access.value]
    if member.is_static:
        words.append("static")
    if isinstance(member, MethodDecl) and member.is_abstract:
        words.append("abstract")
    return " ".join(words)


def print_field(field: FieldDecl, depth: int = 1) -> str:
    init = f" = {print_expr(field.initializer)}" if field.initializer is not None else ""
    return f"{INDENT * depth}{_modifiers(field)} {field.declared_type} {field.name}{init};"


def print_method(method: MethodDecl, depth: int = 1) -> str:
    pad = INDENT * depth
    params = ", ".join(f"{p.type_name} {p.name}" for p in method.params)
    head = f"{pad}{_modifiers(method)} {method.return_type} {method.name}({params})"
    if method.body is None:
        return head + ";"
    return "\n".join([head + " {", *print_block(method.body, depth + 1), f"{pad}}}"])


def print_class(cls: ClassDecl) -> str:
    head = "abstract class" if cls.is_abstract else "class"
    extends = f" extends {cls.superclass}" if cls.superclass else ""
    parts = [f"{head} {cls.name}{extends} {{"]
    body: List[str] = []
    if cls.fields:
        body.append("\n".join(print_field(f) for f in cls.fields))
    body.extend(print_method(m) for m in cls.methods)
    if body:
        parts.append("\n\n".join(body))
    parts.append("}")
    return "\n".join(parts)


def pretty(unit: SourceUnit) -> str:
    if not unit.classes:
        return ""
    return "\n\n".join(print_class(c) for c in unit.classes) + "\n"
