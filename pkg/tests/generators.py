"""Seeded random subject-language inputs for the property tests."""

import random
from typing import Dict, List, Optional, Tuple

from models.syntax import (
    Access, Assign, Binary, BoolLit, Call, CharLit, ClassDecl, ExprStmt, FieldAccess, FieldDecl,
    If, IntLit, MethodCall, MethodDecl, New, Param, ReflectCall, ReflectSet, Return, SourceUnit,
    StringLit, This, Unary, Var, VarDecl, While,
)

NAMES = ("a", "b", "x", "y2", "count", "total", "val_2", "node", "k9", "_tmp")
CLASS_NAMES = ("A", "B", "Node", "Widget", "Shape2")
TYPES = ("int", "bool", "char", "string")
TEXT = "ABXyz09 '\"\n\\"
BINARY_OPS = ("||", "&&", "==", "!=", "<", "<=", ">", ">=", "+", "-", "*", "/", "%")


# ---------------------------------------------------------------------------
# Syntax trees (shape only, not type-checked)
# ---------------------------------------------------------------------------

class TreeBuilder:
    def __init__(self, rng: random.Random):
        self.rng = rng

    def text(self, limit: int = 4) -> str:
        return "".join(self.rng.choice(TEXT) for _ in range(self.rng.randrange(limit + 1)))

    def leaf(self):
        pick = self.rng.randrange(6)
        if pick == 0:
            return IntLit(value=self.rng.randrange(1000))
        if pick == 1:
            return BoolLit(value=self.rng.random() < 0.5)
        if pick == 2:
            return CharLit(value=self.rng.choice(TEXT))
        if pick == 3:
            return StringLit(value=self.text())
        if pick == 4:
            return This()
        return Var(name=self.rng.choice(NAMES))

    def args(self, depth: int) -> list:
        return [self.expr(depth - 1) for _ in range(self.rng.randrange(3))]

    def target(self, depth: int):
        # literals are never the target of a member access
        while True:
            expr = self.expr(depth - 1)
            if not isinstance(expr, (IntLit, BoolLit, CharLit, StringLit)):
                return expr

    def expr(self, depth: int):
        if depth <= 0 or self.rng.random() < 0.25:
            return self.leaf()
        pick = self.rng.randrange(8)
        if pick == 0:
            return Unary(op=self.rng.choice("!-"), operand=self.expr(depth - 1))
        if pick in (1, 2):
            return Binary(op=self.rng.choice(BINARY_OPS), left=self.expr(depth - 1), right=self.expr(depth - 1))
        if pick == 3:
            return Call(name=self.rng.choice(NAMES), args=self.args(depth))
        if pick == 4:
            return MethodCall(target=self.target(depth), name=self.rng.choice(NAMES), args=self.args(depth))
        if pick == 5:
            return FieldAccess(target=self.target(depth), name=self.rng.choice(NAMES))
        if pick == 6:
            return New(class_name=self.rng.choice(CLASS_NAMES))
        receiver = self.rng.choice((None, *NAMES))
        return ReflectCall(receiver=receiver, class_name=self.rng.choice(CLASS_NAMES),
                           method=self.rng.choice(NAMES), args=self.args(depth))

    def block(self, depth: int) -> list:
        return [self.stmt(depth - 1) for _ in range(self.rng.randrange(4))]

    def stmt(self, depth: int):
        pick = self.rng.randrange(8 if depth > 0 else 5)
        if pick == 0:
            init = self.expr(2) if self.rng.random() < 0.7 else None
            return VarDecl(type_name=self.rng.choice(TYPES + CLASS_NAMES), name=self.rng.choice(NAMES), init=init)
        if pick == 1:
            target = Var(name=self.rng.choice(NAMES)) if self.rng.random() < 0.5 else \
                FieldAccess(target=self.target(2), name=self.rng.choice(NAMES))
            return Assign(target=target, value=self.expr(3))
        if pick == 2:
            return Return(value=self.expr(2) if self.rng.random() < 0.7 else None)
        if pick == 3:
            call = Call(name=self.rng.choice(NAMES), args=self.args(2)) if self.rng.random() < 0.5 else \
                MethodCall(target=self.target(2), name=self.rng.choice(NAMES), args=self.args(2))
            return ExprStmt(expr=call)
        if pick == 4:
            return ReflectSet(receiver=self.rng.choice((None, *NAMES)), class_name=self.rng.choice(CLASS_NAMES),
                              field=self.rng.choice(NAMES), value=self.expr(2))
        if pick == 5:
            return While(cond=self.expr(3), body=self.block(depth))
        else_body = self.rng.choice((None, "block", "chain"))
        if else_body == "block":
            else_body = self.block(depth)
        elif else_body == "chain":
            else_body = [If(cond=self.expr(2), then_body=self.block(depth), else_body=None)]
        return If(cond=self.expr(3), then_body=self.block(depth), else_body=else_body)

    def method(self, owner: str, abstract: bool) -> MethodDecl:
        params = [Param(name=self.rng.choice(NAMES), type_name=self.rng.choice(TYPES + CLASS_NAMES))
                  for _ in range(self.rng.randrange(3))]
        return MethodDecl(
            owner=owner, name=self.rng.choice(NAMES), params=params,
            return_type=self.rng.choice(TYPES + ("void",) + CLASS_NAMES),
            is_static=self.rng.random() < 0.3, is_abstract=abstract,
            access=self.rng.choice(list(Access)),
            body=None if abstract else self.block(3),
        )

    def klass(self, name: str) -> ClassDecl:
        is_abstract = self.rng.random() < 0.3
        fields = [
            FieldDecl(name=self.rng.choice(NAMES), declared_type=self.rng.choice(TYPES),
                      is_static=self.rng.random() < 0.4, access=self.rng.choice(list(Access)),
                      initializer=self.leaf() if self.rng.random() < 0.6 else None, owner=name)
            for _ in range(self.rng.randrange(3))
        ]
        methods = [self.method(name, is_abstract and self.rng.random() < 0.5) for _ in range(self.rng.randrange(4))]
        superclass = self.rng.choice((None, *CLASS_NAMES))
        return ClassDecl(name=name, superclass=superclass, is_abstract=is_abstract, fields=fields, methods=methods)

    def unit(self, path: str = "Random.sj") -> SourceUnit:
        names = self.rng.sample(CLASS_NAMES, self.rng.randrange(1, 4))
        return SourceUnit(path=path, classes=[self.klass(name) for name in names])


def random_unit(seed: int) -> SourceUnit:
    return TreeBuilder(random.Random(seed)).unit()


# ---------------------------------------------------------------------------
# Well-typed programs
# ---------------------------------------------------------------------------

PROGRAM_PRELUDE = """
class Box {
    public int value = 1;
    private string label = "B";

    public int get() {
        return value;
    }

    public void put(int v) {
        if (v > 100) {
            value = 100;
        } else {
            value = v;
        }
    }

    public string tag(char c) {
        if (c == 'A') {
            return label;
        }
        return concat(label, "Z");
    }

    private int secret(int x) {
        return x * 2;
    }
}

class Gen {
    private static int counter = 0;
    public static int limit = 3;

    public static int step(int p) {
        counter = counter + 1;
        if (p > limit) {
            return p - 1;
        }
        return p + 1;
    }

    private static bool flip(bool b, char c) {
        if (c == 'A' && b) {
            return false;
        }
        return !b;
    }

    public static void run() {
        int i0 = 3;
        int i1 = -2;
        bool b0 = true;
        bool b1 = false;
        char c0 = 'A';
        char c1 = 'X';
        string s0 = "AB";
        string s1 = "";
        Box box = new Box();
"""

LOCALS = {"int": ("i0", "i1"), "bool": ("b0", "b1"), "char": ("c0", "c1"), "string": ("s0", "s1")}
RELATIONAL = ("<", "<=", ">", ">=")


class ProgramBuilder:
    """Random statements for ``Gen.run`` that always type-check.

    Values only grow by a literal per step, so a loop that runs to the step
    budget stays cheap to evaluate.
    """

    def __init__(self, rng: random.Random):
        self.rng = rng

    def pick(self, *options):
        return self.rng.choice(options)

    def int_expr(self, depth: int) -> str:
        if depth <= 0 or self.rng.random() < 0.3:
            return self.pick(str(self.rng.randrange(10)), *LOCALS["int"], "counter", "Gen.limit", "box.value")
        a, b = self.int_expr(depth - 1), self.int_expr(depth - 1)
        return self.pick(
            f"({a} + {b})", f"({a} - {b})", f"({a} * {self.rng.randrange(4)})", f"({a} / {b})", f"({a} % {b})",
            f"(-{a})", f"length({self.string_expr(depth - 1)})",
            f"indexOf({self.string_expr(depth - 1)}, {self.char_expr(depth - 1)})",
            f"step({a})", f"Gen.step({a})", "box.get()", f"reflect call box.Box#secret({a})",
            f"reflect call Gen#step({a})",
        )

    def bool_expr(self, depth: int) -> str:
        if depth <= 0 or self.rng.random() < 0.3:
            return self.pick("true", "false", *LOCALS["bool"])
        return self.pick(
            f"({self.int_expr(depth - 1)} {self.pick(*RELATIONAL)} {self.int_expr(depth - 1)})",
            f"({self.int_expr(depth - 1)} {self.pick('==', '!=')} {self.int_expr(depth - 1)})",
            f"({self.char_expr(depth - 1)} {self.pick('==', '!=', *RELATIONAL)} {self.char_expr(depth - 1)})",
            f"({self.string_expr(depth - 1)} {self.pick('==', '!=')} {self.string_expr(depth - 1)})",
            f"({self.bool_expr(depth - 1)} {self.pick('&&', '||')} {self.bool_expr(depth - 1)})",
            f"(!{self.bool_expr(depth - 1)})",
            f"flip({self.bool_expr(depth - 1)}, {self.char_expr(depth - 1)})",
        )

    def char_expr(self, depth: int) -> str:
        if depth <= 0 or self.rng.random() < 0.4:
            return self.pick("'A'", "'B'", "'Z'", *LOCALS["char"])
        return f"charAt({self.string_expr(depth - 1)}, {self.int_expr(depth - 1)})"

    def string_expr(self, depth: int) -> str:
        if depth <= 0 or self.rng.random() < 0.3:
            return self.pick('"AB"', '""', '"XYZ"', *LOCALS["string"])
        s = self.string_expr(depth - 1)
        return self.pick(
            f'({s} + "X")', f'concat({s}, "Y")',
            f"substring({s}, {self.int_expr(depth - 1)}, {self.int_expr(depth - 1)})",
            f"box.tag({self.char_expr(depth - 1)})", f"reflect call box.Box#tag({self.char_expr(depth - 1)})",
        )

    def expr_of(self, type_name: str, depth: int = 3) -> str:
        return {
            "int": self.int_expr, "bool": self.bool_expr, "char": self.char_expr, "string": self.string_expr,
        }[type_name](depth)

    def stmt(self, depth: int, pad: str) -> List[str]:
        pick = self.rng.randrange(9 if depth > 0 else 6)
        if pick <= 1:
            type_name = self.pick(*TYPES)
            return [f"{pad}{self.pick(*LOCALS[type_name])} = {self.expr_of(type_name)};"]
        if pick == 2:
            target = self.pick("counter", "Gen.limit", "box.value")
            return [f"{pad}{target} = {self.int_expr(2)};"]
        if pick == 3:
            call = self.pick(f"box.put({self.int_expr(2)})", f"step({self.int_expr(2)})",
                             f"reflect call box.Box#secret({self.int_expr(2)})")
            return [f"{pad}{call};"]
        if pick == 4:
            return [f"{pad}reflect set box.Box#label = {self.string_expr(2)};"]
        if pick == 5:
            return [f"{pad}{self.pick('box = new Box();', 'return;', 'i0 = i0 + 1;')}"]
        inner = pad + "    "
        body = [line for _ in range(self.rng.randrange(1, 4)) for line in self.stmt(depth - 1, inner)]
        if pick == 6:
            return [f"{pad}while ({self.bool_expr(2)}) {{", *body, f"{pad}}}"]
        lines = [f"{pad}if ({self.bool_expr(3)}) {{", *body]
        if pick == 8:
            lines.append(f"{pad}}} else {{")
            lines.extend(line for _ in range(self.rng.randrange(1, 3)) for line in self.stmt(depth - 1, inner))
        lines.append(f"{pad}}}")
        return lines

    def program(self, statements: int = 8) -> str:
        pad = " " * 8
        body = [line for _ in range(statements) for line in self.stmt(2, pad)]
        return PROGRAM_PRELUDE + "\n".join(body) + "\n    }\n}\n"


def random_program(seed: int) -> str:
    return ProgramBuilder(random.Random(seed)).program()


# ---------------------------------------------------------------------------
# Class hierarchies
# ---------------------------------------------------------------------------

HIERARCHY_METHODS = {
    "m()": "public int m() {{\n        return {tag};\n    }}",
    "n(int)": "public int n(int x) {{\n        return x + {tag};\n    }}",
    "k(bool)": "public int k(bool b) {{\n        if (b) {{\n            return {tag};\n        }}\n        return 0;\n    }}",
}


def random_hierarchy(seed: int, size: int = 7, max_depth: int = 5) -> Tuple[str, Dict[str, Optional[str]], Dict[str, List[str]]]:
    """Source of a random single-inheritance forest, its parent map and each class's declared signatures."""
    rng = random.Random(seed)
    parents: Dict[str, Optional[str]] = {}
    depth: Dict[str, int] = {}
    declared: Dict[str, List[str]] = {}
    blocks = []
    for i in range(size):
        name = f"K{i}"
        eligible = [c for c in parents if depth[c] < max_depth]
        parent = rng.choice(eligible) if eligible and rng.random() < 0.8 else None
        parents[name] = parent
        depth[name] = 1 if parent is None else depth[parent] + 1
        declared[name] = sorted(sig for sig in HIERARCHY_METHODS if rng.random() < 0.4)
        extends = f" extends {parent}" if parent else ""
        members = [HIERARCHY_METHODS[sig].format(tag=100 * i + j) for j, sig in enumerate(declared[name])]
        body = "".join(f"    {member}\n\n" for member in members).rstrip("\n")
        blocks.append(f"class {name}{extends} {{\n{body}\n}}\n" if body else f"class {name}{extends} {{\n}}\n")
    return "\n".join(blocks), parents, declared
