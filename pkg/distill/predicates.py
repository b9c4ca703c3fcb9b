"""Parameter predicates: the closed atom vocabulary, its intersection, and
derivation of atoms from symbolic path conditions."""

import logging
from typing import Any, Dict, List, Optional, Tuple, Union

from knowledge.dataflow import COMPARISONS, FLIPPED, NEGATED, literal_value
from knowledge.store import KnowledgeBase
from models.context import (
    BoolConstraint, CharConstraint, IntConstraint, ParamPredicate, StringConstraint, Unresolved,
)
from models.knowledge import CfgPath, ReturnConstraint, ReturnKind
from models.syntax import Binary, Call, CharLit, FieldRef, StringLit, Unary, Var
from subjectlang.printer import print_expr
from distill.symbolic import contains_stale_field, contains_temp, make_literal, replay

logger = logging.getLogger(__name__)

EMPTY = ParamPredicate(empty=True)


# ---------------------------------------------------------------------------
# Atom algebra
# ---------------------------------------------------------------------------

def normalize_int(atom: IntConstraint) -> Optional[IntConstraint]:
    lower, upper = atom.lower, atom.upper
    if lower is not None and upper is not None and lower > upper:
        return None
    excluded = sorted({
        v for v in atom.excluded
        if (lower is None or v >= lower) and (upper is None or v <= upper)
    })
    if lower is not None and upper is not None and upper - lower + 1 <= len(excluded):
        return None
    return atom.model_copy(update={"excluded": excluded})


def int_atom(op: str, value: int) -> IntConstraint:
    if op == "<":
        return IntConstraint(hi=value, hi_closed=False)
    if op == "<=":
        return IntConstraint(hi=value)
    if op == ">":
        return IntConstraint(lo=value, lo_closed=False)
    if op == ">=":
        return IntConstraint(lo=value)
    if op == "==":
        return IntConstraint(lo=value, hi=value)
    return IntConstraint(excluded=[value])


def _intersect_int(a: IntConstraint, b: IntConstraint) -> Optional[IntConstraint]:
    lo, lo_closed = a.lo, a.lo_closed
    if b.lower is not None and (a.lower is None or b.lower > a.lower):
        lo, lo_closed = b.lo, b.lo_closed
    hi, hi_closed = a.hi, a.hi_closed
    if b.upper is not None and (a.upper is None or b.upper < a.upper):
        hi, hi_closed = b.hi, b.hi_closed
    return normalize_int(IntConstraint(
        lo=lo, lo_closed=lo_closed, hi=hi, hi_closed=hi_closed, excluded=a.excluded + b.excluded,
    ))


def _intersect_char(a: CharConstraint, b: CharConstraint) -> Optional[CharConstraint]:
    forbidden = "".join(sorted(set(a.forbidden) | set(b.forbidden)))
    allowed = a.allowed
    if b.allowed is not None:
        allowed = b.allowed if allowed is None else "".join(c for c in allowed if c in b.allowed)
    if allowed is None:
        return CharConstraint(forbidden=forbidden)
    allowed = "".join(c for c in dict.fromkeys(allowed) if c not in forbidden)
    return CharConstraint(allowed=allowed) if allowed else None


def _intersect_string(a: StringConstraint, b: StringConstraint) -> Optional[StringConstraint]:
    if a.equals is not None and b.equals is not None and a.equals != b.equals:
        return None
    equals = a.equals if a.equals is not None else b.equals
    mins = [m for m in (a.min_length, b.min_length) if m is not None]
    maxs = [m for m in (a.max_length, b.max_length) if m is not None]
    min_length = max(mins) if mins else None
    max_length = min(maxs) if maxs else None
    if min_length is not None and min_length <= 0:
        min_length = None
    forbidden = sorted(set(a.forbidden) | set(b.forbidden))
    if max_length is not None and (max_length < 0 or (min_length is not None and min_length > max_length)):
        return None
    merged = StringConstraint(equals=equals, forbidden=forbidden, min_length=min_length, max_length=max_length)
    if equals is not None:
        return StringConstraint(equals=equals) if merged.holds(equals) else None
    return merged


def _intersect_bool(a: BoolConstraint, b: BoolConstraint) -> Optional[BoolConstraint]:
    return a if a.value == b.value else None


def intersect_atoms(a, b):
    """Conjunction of two atoms over the same variable; None when contradictory."""
    if a.kind != b.kind:
        raise ValueError(f"cannot intersect {a.kind} with {b.kind}")
    if a.kind == "int":
        return _intersect_int(a, b)
    if a.kind == "char":
        return _intersect_char(a, b)
    if a.kind == "string":
        return _intersect_string(a, b)
    return _intersect_bool(a, b)


def normalize_atom(atom):
    if atom.kind == "int":
        return normalize_int(atom)
    if atom.kind == "char":
        return _intersect_char(atom, CharConstraint())
    if atom.kind == "string":
        return _intersect_string(atom, StringConstraint())
    return atom


def conjoin(predicate: ParamPredicate, name: str, atom) -> ParamPredicate:
    if predicate.empty:
        return predicate
    atoms = dict(predicate.atoms)
    merged = intersect_atoms(atoms[name], atom) if name in atoms else normalize_atom(atom)
    if merged is None:
        return EMPTY
    atoms[name] = merged
    return ParamPredicate(atoms=atoms)


def intersect_predicates(predicates: List[ParamPredicate]) -> ParamPredicate:
    result = ParamPredicate()
    for predicate in predicates:
        if predicate.empty:
            return EMPTY
        for name, atom in predicate.atoms.items():
            result = conjoin(result, name, atom)
            if result.empty:
                return EMPTY
    return result


def shift_int(atom: IntConstraint, delta: int) -> IntConstraint:
    """The atom on ``p`` implied by ``atom`` holding on ``p + delta``."""
    return IntConstraint(
        lo=None if atom.lo is None else atom.lo - delta, lo_closed=atom.lo_closed,
        hi=None if atom.hi is None else atom.hi - delta, hi_closed=atom.hi_closed,
        excluded=[v - delta for v in atom.excluded],
    )


# ---------------------------------------------------------------------------
# Derivation from symbolic conditions
# ---------------------------------------------------------------------------

SKIP = "skip"
CONTRADICTION = "contradiction"
TAUTOLOGY = "tautology"


def _subject(expr, subjects: Dict[str, str]) -> Optional[str]:
    if isinstance(expr, Var) and expr.name in subjects:
        return expr.name
    if isinstance(expr, FieldRef) and expr.qualified in subjects:
        return expr.qualified
    return None


def _linear(expr, subjects: Dict[str, str]) -> Optional[Tuple[Optional[Tuple[str, str]], int]]:
    """(subject, offset) with subject ("int", name) or ("len", name), or (None, k) for a constant."""
    is_const, value = literal_value(expr)
    if is_const:
        if isinstance(value, int) and not isinstance(value, bool):
            return None, value
        return None
    name = _subject(expr, subjects)
    if name is not None:
        return (("int", name), 0) if subjects[name] == "int" else None
    if isinstance(expr, Call) and expr.name == "length":
        inner = _subject(expr.args[0], subjects)
        if inner is not None and subjects[inner] == "string":
            return ("len", inner), 0
        return None
    if isinstance(expr, Binary) and expr.op in ("+", "-"):
        left = _linear(expr.left, subjects)
        right = _linear(expr.right, subjects)
        if left is None or right is None:
            return None
        if expr.op == "+":
            if left[0] is not None and right[0] is not None:
                return None
            return left[0] or right[0], left[1] + right[1]
        if right[0] is not None:
            return None
        return left[0], left[1] - right[1]
    return None


def _compare(op: str, left: Any, right: Any) -> bool:
    return {
        "==": left == right, "!=": left != right, "<": left < right,
        "<=": left <= right, ">": left > right, ">=": left >= right,
    }[op]


def _length_atom(op: str, value: int) -> Union[StringConstraint, str, None]:
    if op == "!=":
        return StringConstraint(min_length=1) if value == 0 else (TAUTOLOGY if value < 0 else None)
    atom = normalize_int(int_atom(op, value))
    if atom is None:
        return CONTRADICTION
    return StringConstraint(min_length=atom.lower, max_length=atom.upper)


def _index_of_atom(text: str, op: str, value: int) -> Union[CharConstraint, str]:
    positions: Dict[str, int] = {}
    for index, ch in enumerate(text):
        positions.setdefault(ch, index)
    passing = "".join(ch for ch, pos in positions.items() if _compare(op, pos, value))
    failing = "".join(ch for ch, pos in positions.items() if not _compare(op, pos, value))
    if _compare(op, -1, value):
        return CharConstraint(forbidden="".join(sorted(failing))) if failing else TAUTOLOGY
    return CharConstraint(allowed=passing) if passing else CONTRADICTION


def atom_for(expr, outcome: bool, subjects: Dict[str, str]):
    """One atom ``(name, constraint)`` for ``expr == outcome``; or SKIP,
    CONTRADICTION, TAUTOLOGY; or None when the shape is unsupported."""
    is_const, value = literal_value(expr)
    if is_const:
        return TAUTOLOGY if value is outcome else CONTRADICTION
    if contains_stale_field(expr):
        return None
    if contains_temp(expr):
        return SKIP
    if isinstance(expr, Unary) and expr.op == "!":
        return atom_for(expr.operand, not outcome, subjects)
    name = _subject(expr, subjects)
    if name is not None and subjects[name] == "bool":
        return name, BoolConstraint(value=outcome)
    if not (isinstance(expr, Binary) and expr.op in COMPARISONS):
        return None
    op = expr.op if outcome else NEGATED[expr.op]
    left, right = expr.left, expr.right

    left_lin, right_lin = _linear(left, subjects), _linear(right, subjects)
    if left_lin is not None and right_lin is not None:
        if left_lin[0] is None and right_lin[0] is None:
            return TAUTOLOGY if _compare(op, left_lin[1], right_lin[1]) else CONTRADICTION
        if left_lin[0] is None:
            left_lin, right_lin, op = right_lin, left_lin, FLIPPED[op]
        if right_lin[0] is None:
            (kind, subject), bound = left_lin[0], right_lin[1] - left_lin[1]
            if kind == "int":
                return subject, int_atom(op, bound)
            atom = _length_atom(op, bound)
            return atom if isinstance(atom, str) or atom is None else (subject, atom)
        if left_lin[0] == right_lin[0]:
            return TAUTOLOGY if _compare(op, left_lin[1], right_lin[1]) else CONTRADICTION
        return None

    for this, other, this_op in ((left, right, op), (right, left, FLIPPED[op])):
        other_const, other_value = literal_value(other)
        if not other_const:
            continue
        subject = _subject(this, subjects)
        if subject is not None:
            kind = subjects[subject]
            if kind == "char" and isinstance(other, CharLit) and this_op in ("==", "!="):
                return subject, (CharConstraint(allowed=other_value) if this_op == "=="
                                 else CharConstraint(forbidden=other_value))
            if kind == "string" and isinstance(other, StringLit) and this_op in ("==", "!="):
                return subject, (StringConstraint(equals=other_value) if this_op == "=="
                                 else StringConstraint(forbidden=[other_value]))
            if kind == "bool" and isinstance(other_value, bool) and this_op in ("==", "!="):
                return subject, BoolConstraint(value=(other_value if this_op == "==" else not other_value))
            return None
        if (isinstance(this, Call) and this.name == "indexOf" and isinstance(this.args[0], StringLit)
                and isinstance(other_value, int) and not isinstance(other_value, bool)):
            char_subject = _subject(this.args[1], subjects)
            if char_subject is not None:
                atom = _index_of_atom(this.args[0].value, this_op, other_value)
                return atom if isinstance(atom, str) else (char_subject, atom)
    return None


def derive_atoms(conditions: List[Tuple[Any, bool, str]], subjects: Dict[str, str]) -> Tuple[ParamPredicate, List[str]]:
    """Conjoin every supported condition; return the predicate and the unsupported guards."""
    predicate = ParamPredicate()
    unresolved: List[str] = []
    for expr, outcome, label in conditions:
        result = atom_for(expr, outcome, subjects)
        if result in (SKIP, TAUTOLOGY):
            continue
        if result == CONTRADICTION:
            return EMPTY, []
        if result is None:
            unresolved.append(f"{label} is {'true' if outcome else 'false'}")
            continue
        name, atom = result
        predicate = conjoin(predicate, name, atom)
        if predicate.empty:
            return EMPTY, []
    ordered = {name: predicate.atoms[name] for name in subjects if name in predicate.atoms}
    return ParamPredicate(atoms=ordered), unresolved


def finalize(predicate: ParamPredicate, unresolved: List[str]) -> Union[ParamPredicate, Unresolved]:
    if predicate.empty or not unresolved:
        return predicate
    return Unresolved(guards=unresolved, partial=predicate)


# ---------------------------------------------------------------------------
# Return obligations
# ---------------------------------------------------------------------------

def return_conditions(returned, rc: ReturnConstraint, return_type: str) -> List[Tuple[Any, bool, str]]:
    """Conditions on the returned expression equivalent to ``rc``."""
    label = f"return {print_expr(returned)}"
    if rc.kind == ReturnKind.TRUTHY:
        return [(returned, True, label)]
    if rc.kind == ReturnKind.FALSY:
        return [(returned, False, label)]
    if rc.kind in (ReturnKind.EQUALS, ReturnKind.NOT_EQUALS):
        guard = Binary(op="==", left=returned, right=make_literal(rc.value, return_type))
        return [(guard, rc.kind == ReturnKind.EQUALS, label)]
    lo, hi = rc.bounds()
    out = []
    if lo is not None:
        out.append((Binary(op=">=", left=returned, right=make_literal(lo)), True, label))
    if hi is not None:
        out.append((Binary(op="<=", left=returned, right=make_literal(hi)), True, label))
    return out


def derive_param_predicate(callee: str, path: CfgPath, rc: Optional[ReturnConstraint],
                           kb: KnowledgeBase) -> Union[ParamPredicate, Unresolved]:
    """Predicate over the callee's parameters that drives it down ``path`` to a return meeting ``rc``."""
    method = kb.facts.method(callee)
    outcome = replay(kb.cfg_of(callee), path, method, kb.facts)
    conditions = list(outcome.conditions)
    pending: List[str] = []
    if rc is not None and outcome.returns_value:
        if contains_temp(outcome.returned):
            pending.append(f"return {print_expr(outcome.returned)} {rc.render()}")
        else:
            conditions.extend(return_conditions(outcome.returned, rc, method.return_type))
    predicate, unresolved = derive_atoms(conditions, dict(method.params))
    if predicate.empty:
        return predicate
    return finalize(predicate, unresolved + pending)
