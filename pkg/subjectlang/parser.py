"""Frontend for ``.sj`` sources: lark LALR parse plus a transformer into models.syntax."""

import logging
import os
from functools import lru_cache
from typing import List, Optional, Tuple

from lark import Lark, Token, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken

from models.errors import SourceSyntaxError
from models.syntax import (
    Access, Assign, Binary, BoolLit, Call, CharLit, ClassDecl, Diagnostic, ExprStmt,
    FieldAccess, FieldDecl, If, IntLit, MethodCall, MethodDecl, New, Param, ReflectCall,
    ReflectSet, Return, Severity, SourceUnit, Span, StringLit, This, Unary, Var, VarDecl,
    While,
)

logger = logging.getLogger(__name__)

_GRAMMAR_PATH = os.path.join(os.path.dirname(__file__), "subject.lark")

_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", "0": "\0", "\\": "\\", "'": "'", '"': '"'}
_OPENERS = {"(": ")", "{": "}"}
_CLOSERS = {")": "(", "}": "{"}


@lru_cache(maxsize=1)
def _parser() -> Lark:
    with open(_GRAMMAR_PATH, encoding="utf-8") as handle:
        return Lark(handle.read(), parser="lalr", propagate_positions=True)


def unescape(body: str) -> str:
    out = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch == "\\" and i + 1 < len(body):
            out.append(_ESCAPES.get(body[i + 1], body[i + 1]))
            i += 2
            continue
        out.append(ch)
        i += 1
    return "".join(out)


def _span(meta) -> Span:
    if getattr(meta, "empty", True):
        return Span()
    return Span(line=meta.line, column=meta.column, end_line=meta.end_line, end_column=meta.end_column)


def _token_span(token: Token) -> Span:
    return Span(
        line=token.line or 0,
        column=token.column or 0,
        end_line=token.end_line or token.line or 0,
        end_column=token.end_column or token.column or 0,
    )


class _TypeName(str):
    """Marks a parsed type so it is not confused with a NAME token."""


@v_args(meta=True)
class _ToModels(Transformer):
    def start(self, meta, children):
        return list(children)

    def superclass(self, meta, children):
        return _TypeName(children[0])

    def class_decl(self, meta, children):
        is_abstract = False
        name = None
        superclass = None
        fields: List[FieldDecl] = []
        methods: List[MethodDecl] = []
        for child in children:
            if isinstance(child, Token) and child.type == "ABSTRACT":
                is_abstract = True
            elif isinstance(child, _TypeName):
                superclass = str(child)
            elif isinstance(child, Token):
                name = str(child)
            elif isinstance(child, FieldDecl):
                fields.append(child)
            elif isinstance(child, MethodDecl):
                methods.append(child)
        for member in (*fields, *methods):
            member.owner = name
        return ClassDecl(
            name=name, superclass=superclass, is_abstract=is_abstract,
            fields=fields, methods=methods, span=_span(meta),
        )

    def access(self, meta, children):
        return Access(str(children[0]))

    def type(self, meta, children):
        return _TypeName(children[0])

    def field_decl(self, meta, children):
        access, rest = children[0], list(children[1:])
        is_static = bool(rest) and isinstance(rest[0], Token) and rest[0].type == "STATIC"
        if is_static:
            rest = rest[1:]
        declared_type, name = rest[0], rest[1]
        initializer = rest[2] if len(rest) > 2 else None
        return FieldDecl(
            name=str(name), declared_type=str(declared_type), is_static=is_static,
            access=access, initializer=initializer, span=_span(meta),
        )

    def method_decl(self, meta, children):
        access, rest = children[0], list(children[1:])
        is_static = is_abstract = False
        while rest and isinstance(rest[0], Token) and rest[0].type in ("STATIC", "ABSTRACT"):
            if rest[0].type == "STATIC":
                is_static = True
            else:
                is_abstract = True
            rest = rest[1:]
        return_type, name, params = rest[0], rest[1], rest[2]
        body = rest[3] if len(rest) > 3 else None
        return MethodDecl(
            name=str(name), params=params, return_type=str(return_type),
            is_static=is_static, is_abstract=is_abstract, access=access,
            body=body, span=_span(meta),
        )

    def param_list(self, meta, children):
        return list(children)

    def param(self, meta, children):
        return Param(type_name=str(children[0]), name=str(children[1]), span=_span(meta))

    def block(self, meta, children):
        return list(children)

    def var_decl(self, meta, children):
        init = children[2] if len(children) > 2 else None
        return VarDecl(type_name=str(children[0]), name=str(children[1]), init=init, span=_span(meta))

    def assign(self, meta, children):
        return Assign(target=children[0], value=children[1], span=_span(meta))

    def expr_stmt(self, meta, children):
        return ExprStmt(expr=children[0], span=_span(meta))

    def if_stmt(self, meta, children):
        else_body = children[2] if len(children) > 2 else None
        return If(cond=children[0], then_body=children[1], else_body=else_body, span=_span(meta))

    def else_part(self, meta, children):
        child = children[0]
        return [child] if isinstance(child, If) else child

    def while_stmt(self, meta, children):
        return While(cond=children[0], body=children[1], span=_span(meta))

    def return_stmt(self, meta, children):
        return Return(value=children[0] if children else None, span=_span(meta))

    def reflect_set(self, meta, children):
        receiver, class_name, field = children[0]
        return ReflectSet(
            receiver=receiver, class_name=class_name, field=field,
            value=children[1], span=_span(meta),
        )

    def target_with_receiver(self, meta, children):
        return (str(children[0]), str(children[1]), str(children[2]))

    def target_static(self, meta, children):
        return (None, str(children[0]), str(children[1]))

    def binary(self, meta, children):
        left, op, right = children
        return Binary(op=str(op), left=left, right=right, span=_span(meta))

    def unary(self, meta, children):
        return Unary(op=str(children[0]), operand=children[1], span=_span(meta))

    def method_call(self, meta, children):
        return MethodCall(target=children[0], name=str(children[1]), args=children[2], span=_span(meta))

    def field_access(self, meta, children):
        return FieldAccess(target=children[0], name=str(children[1]), span=_span(meta))

    def arg_list(self, meta, children):
        return list(children)

    def int_lit(self, meta, children):
        return IntLit(value=int(children[0]), span=_span(meta))

    def true_lit(self, meta, children):
        return BoolLit(value=True, span=_span(meta))

    def false_lit(self, meta, children):
        return BoolLit(value=False, span=_span(meta))

    def char_lit(self, meta, children):
        return CharLit(value=unescape(str(children[0])[1:-1]), span=_span(meta))

    def string_lit(self, meta, children):
        return StringLit(value=unescape(str(children[0])[1:-1]), span=_span(meta))

    def call(self, meta, children):
        return Call(name=str(children[0]), args=children[1], span=_span(meta))

    def var(self, meta, children):
        return Var(name=str(children[0]), span=_span(meta))

    def this_ref(self, meta, children):
        return This(span=_span(meta))

    def new_obj(self, meta, children):
        return New(class_name=str(children[0]), span=_span(meta))

    def reflect_call_recv(self, meta, children):
        return ReflectCall(
            receiver=str(children[0]), class_name=str(children[1]), method=str(children[2]),
            args=children[3], span=_span(meta),
        )

    def reflect_call_static(self, meta, children):
        return ReflectCall(
            class_name=str(children[0]), method=str(children[1]), args=children[2], span=_span(meta),
        )


def _syntax_error(path: str, line: int, column: int, message: str, width: int = 1) -> Diagnostic:
    return Diagnostic(
        severity=Severity.ERROR,
        span=Span(line=line, column=column, end_line=line, end_column=column + width),
        code="SYNTAX_ERROR",
        message=message,
        path=path,
    )


def scan_brackets(text: str, path: str = "") -> List[Diagnostic]:
    """Report unbalanced ``(`` / ``{`` at the opener, skipping literals and comments."""
    diagnostics: List[Diagnostic] = []
    stack: List[Tuple[str, int, int]] = []
    line, column = 1, 1
    i = 0
    n = len(text)

    def advance(count: int) -> None:
        nonlocal i, line, column
        for _ in range(count):
            if i >= n:
                return
            if text[i] == "\n":
                line += 1
                column = 1
            else:
                column += 1
            i += 1

    while i < n:
        ch = text[i]
        nxt = text[i + 1] if i + 1 < n else ""
        if ch == "/" and nxt == "/":
            while i < n and text[i] != "\n":
                advance(1)
            continue
        if ch == "/" and nxt == "*":
            advance(2)
            while i < n and not (text[i] == "*" and i + 1 < n and text[i + 1] == "/"):
                advance(1)
            advance(2)
            continue
        if ch in ("'", '"'):
            advance(1)
            while i < n and text[i] != ch and text[i] != "\n":
                advance(2 if text[i] == "\\" else 1)
            advance(1)
            continue
        if ch in _OPENERS:
            stack.append((ch, line, column))
        elif ch in _CLOSERS:
            wanted = _CLOSERS[ch]
            if stack and stack[-1][0] == wanted:
                stack.pop()
            elif any(opener == wanted for opener, _, _ in stack):
                while stack[-1][0] != wanted:
                    opener, at_line, at_col = stack.pop()
                    diagnostics.append(_syntax_error(path, at_line, at_col, f"unclosed '{opener}'"))
                stack.pop()
            else:
                diagnostics.append(_syntax_error(path, line, column, f"unmatched '{ch}'"))
        advance(1)

    for opener, at_line, at_col in stack:
        diagnostics.append(_syntax_error(path, at_line, at_col, f"unclosed '{opener}'"))
    return sorted(diagnostics, key=Diagnostic.sort_key)


def _describe(exc: UnexpectedInput, text: str, path: str) -> Diagnostic:
    lines = text.splitlines() or [""]
    line = exc.line if getattr(exc, "line", -1) and exc.line > 0 else len(lines)
    column = exc.column if getattr(exc, "column", -1) and exc.column > 0 else len(lines[-1]) + 1
    if isinstance(exc, UnexpectedToken):
        expected = sorted(exc.expected)[:8]
        token = exc.token
        shown = "end of input" if token.type == "$END" else f"'{token}'"
        message = f"unexpected {shown}; expected one of {', '.join(expected)}"
        width = max(len(str(token)), 1)
    elif isinstance(exc, UnexpectedCharacters):
        message = f"unexpected character {exc.char!r}"
        width = 1
    elif isinstance(exc, UnexpectedEOF):
        message = "unexpected end of input"
        width = 1
    else:
        message = str(exc).splitlines()[0]
        width = 1
    return _syntax_error(path, line, column, message, width)


def parse(text: str, path: str = "<memory>") -> SourceUnit:
    """Parse one source file.

    Raises SourceSyntaxError with at least one span-carrying diagnostic;
    no partial unit is ever returned.
    """
    bracket_errors = scan_brackets(text, path)
    if bracket_errors:
        raise SourceSyntaxError(bracket_errors)
    try:
        tree = _parser().parse(text)
    except UnexpectedInput as exc:
        raise SourceSyntaxError([_describe(exc, text, path)]) from None
    classes = _ToModels().transform(tree)
    logger.debug("parsed %s: %d class(es)", path, len(classes))
    return SourceUnit(path=path, classes=classes)


def parse_or_diagnostics(text: str, path: str = "<memory>") -> Tuple[Optional[SourceUnit], List[Diagnostic]]:
    try:
        return parse(text, path), []
    except SourceSyntaxError as exc:
        return None, list(exc.diagnostics)
