"""Invocation plans, variable requirements, candidate ranking, predicates and resolution."""

import itertools
import random

import pytest

from distill.candidates import candidate_paths_for_return, rank_key, rank_paths
from distill.context import distill, render_obligations
from distill.invocation import plan_invocation
from distill.predicates import derive_param_predicate, int_atom, intersect_atoms, intersect_predicates
from distill.resolution import Resolver, resolve_dependent_method
from distill.variables import collect_variable_requirements
from knowledge.store import build_kb
from models.context import (
    InvocationKind, ParamPredicate, ReceiverRecipe, ResolutionStatus, SetVia, Unresolved,
)
from models.errors import AbstractMethodError, NoConcreteReceiverError
from models.knowledge import ReturnConstraint, ReturnKind
from models.syntax import PRIMITIVE_TYPES
from services.brute_force_service import BruteForceSearch, Domains
from subjectlang.interpreter import Interpreter, run_guarded

from conftest import CONDITION, CONTAINS, IS_VOWEL

FALSY = ReturnConstraint(kind=ReturnKind.FALSY)
TRUTHY = ReturnConstraint(kind=ReturnKind.TRUTHY)
OPS = ("<", "<=", ">", ">=", "==", "!=")


def path_with(kb, method_id, outcomes):
    """The path of ``method_id`` whose obligation outcomes are exactly ``outcomes``."""
    for path in kb.paths_of(method_id):
        if [ob.outcome for ob in path.obligations] == outcomes:
            return path
    raise AssertionError(f"{method_id} has no path {outcomes}")


SENSORS = """
abstract class Sensor {
    public abstract int read(int raw);

    public bool alarm(int raw) {
        if (read(raw) > 2) {
            return true;
        }
        return false;
    }

    public bool quiet(int raw) {
        if (check(raw)) {
            return false;
        }
        return true;
    }

    private bool check(int raw) {
        if (read(raw) == 0) {
            return true;
        }
        return false;
    }
}

class Meter extends Sensor {
    public int read(int raw) {
        if (raw < 0) {
            return 0;
        }
        return raw + 1;
    }
}

class Scaled extends Meter {
    public int read(int raw) {
        if (raw > 2) {
            return raw - 2;
        }
        return 0;
    }
}

class Gate {
    public static bool open(int raw) {
        Scaled s = new Scaled();
        if (s.read(raw) > 0) {
            return true;
        }
        return false;
    }
}
"""


def resolved_calls(kb, method_id, path, receiver_class, results):
    """Every resolution below ``path`` with the runtime class its callee was resolved for."""
    calls = {call.node: call for call in kb.deps_of(method_id, path.index).calls}
    resolver = Resolver(kb)
    for result in results:
        callee, runtime = resolver.callee_of(calls[result.call_node], receiver_class)
        if callee is None or callee.id != result.callee:
            continue
        yield result, runtime, results
        if result.chosen_path is not None:
            yield from resolved_calls(kb, callee.id, result.chosen_path, runtime, result.children)


def assert_predicates_sound(model, kb):
    """Run each resolved callee on a fresh receiver over the small domains.

    Satisfying inputs must reach the chosen path and required return; for
    leaf predicates no violating input may. Returns the two input counts and
    the (callee, runtime class, nested) triples checked.
    """
    search = BruteForceSearch(model, kb, Domains.small())
    satisfied = violated = 0
    seen = set()
    for fact in kb.facts.methods:
        if fact.is_abstract:
            continue
        for path in kb.paths_of(fact.id):
            context = distill(fact.id, path, kb)
            for result, runtime, siblings in resolved_calls(kb, fact.id, path, context.invocation.receiver_class,
                                                            context.resolutions):
                callee = kb.facts.method(result.callee)
                if (result.status != ResolutionStatus.RESOLVED
                        or (not callee.is_static and runtime is None)
                        or any(t not in PRIMITIVE_TYPES for t in callee.param_types)
                        or kb.deps_of(callee.id, result.chosen_path.index).variables):
                    continue
                key = (callee.id, runtime, result.chosen_path.id, result.required_return.model_dump_json(),
                       tuple(result.predicate.render()), bool(result.children))
                if key in seen:
                    continue
                seen.add(key)
                wanted = list(search.path_signature(result.chosen_path))
                # a shared or nested predicate only has to be sufficient
                exact = not result.children and [s.callee for s in siblings].count(callee.id) == 1
                for args in itertools.product(*(search.domain_of(t) for t in callee.param_types)):
                    holds = result.predicate.holds(dict(zip(callee.param_names, args)))
                    if not holds and not exact:
                        continue
                    interpreter = Interpreter(model, record_statements=False)
                    receiver = None if callee.is_static else interpreter.new_object(runtime)
                    value, fault = run_guarded(interpreter, model.method(callee.id), receiver, list(args))
                    reached = (fault is None
                               and interpreter.branch_events(interpreter.first_frame_of(callee.id)) == wanted
                               and result.required_return.holds(value))
                    assert reached == holds, (callee.id, runtime, result.chosen_path.id, args)
                    if holds:
                        satisfied += 1
                    else:
                        violated += 1
    return satisfied, violated, {(callee, runtime, nested) for callee, runtime, _, _, _, nested in seen}


class TestInvocationPlan:
    def test_private_instance_focal_is_reflective(self, metaphone_kb):
        plan = plan_invocation(CONDITION, metaphone_kb.facts)
        assert plan.kind == InvocationKind.INSTANCE_REFLECTIVE
        assert plan.receiver_recipe == ReceiverRecipe.NEW_CONCRETE
        assert plan.receiver_class == "Metaphone"
        assert plan.needs_reflection

    def test_static_plans(self, metaphone_kb, corpus_kb):
        plan = plan_invocation("MathUtil#sign/(int)", corpus_kb.facts)
        assert plan.kind == InvocationKind.STATIC_DIRECT
        assert not plan.needs_reflection
        assert plan.is_static
        assert plan_invocation(CONTAINS, metaphone_kb.facts).kind == InvocationKind.STATIC_REFLECTIVE

    def test_abstract_owner_uses_a_concrete_subclass(self, corpus_kb):
        plan = plan_invocation("Shape#classify/(int)", corpus_kb.facts)
        assert plan.receiver_recipe == ReceiverRecipe.NEW_CONCRETE_SUBCLASS
        assert plan.receiver_class == "Square"
        assert plan.dispatch_target == "Shape#classify/(int)"
        assert plan_invocation("Animal#react/(int)", corpus_kb.facts).receiver_class == "Bird"

    def test_override_becomes_the_dispatch_target(self, compile_one):
        kb = build_kb(compile_one("""
abstract class Base {
    public int value() {
        return 1;
    }
}

class Impl extends Base {
    public int value() {
        return 2;
    }
}
"""))
        plan = plan_invocation("Base#value/()", kb.facts)
        assert plan.receiver_class == "Impl"
        assert plan.dispatch_target == "Impl#value/()"

    def test_abstract_focal_and_missing_receiver(self, corpus_kb, compile_one):
        with pytest.raises(AbstractMethodError):
            plan_invocation("Shape#area/(int)", corpus_kb.facts)
        kb = build_kb(compile_one("""
abstract class Lone {
    public int f() {
        return 1;
    }
}
"""))
        with pytest.raises(NoConcreteReceiverError):
            plan_invocation("Lone#f/()", kb.facts)


class TestVariableRequirements:
    def test_constant_string_read_through_a_builtin(self, metaphone_kb):
        requirements = collect_variable_requirements(IS_VOWEL, metaphone_kb.path(IS_VOWEL, 1), metaphone_kb)
        assert [r.field for r in requirements] == ["Metaphone.VOWELS"]
        vowels = requirements[0]
        assert vowels.set_via == SetVia.REFLECT
        assert vowels.is_static
        assert vowels.required_value_hint is None

    def test_no_field_reads(self, metaphone_kb):
        assert collect_variable_requirements(CONDITION, metaphone_kb.path(CONDITION, 0), metaphone_kb) == []

    def test_direct_guard_on_a_field_gives_a_hint(self, corpus_kb):
        status = "Counter#status/()"
        requirement, = collect_variable_requirements(status, path_with(corpus_kb, status, [True]), corpus_kb)
        assert requirement.field == "Counter.count"
        assert requirement.set_via == SetVia.REFLECT
        assert requirement.render_hint() == "Counter.count == 0"

    def test_public_static_field_is_set_directly(self, compile_one):
        kb = build_kb(compile_one("""
class Gate {
    public static int LIMIT = 0;

    public static bool open() {
        if (LIMIT > 3) {
            return true;
        }
        return false;
    }

    public static void bump() {
        LIMIT = LIMIT + 1;
    }
}
"""))
        focal = "Gate#open/()"
        requirement, = collect_variable_requirements(focal, path_with(kb, focal, [True]), kb)
        assert requirement.set_via == SetVia.DIRECT
        assert requirement.required_value_hint.lower == 4


class TestCandidates:
    def test_four_of_six_paths_return_false(self, metaphone_kb):
        candidates = candidate_paths_for_return(CONTAINS, FALSY, metaphone_kb)
        assert len(metaphone_kb.paths_of(CONTAINS)) == 6
        assert len(candidates) == 4

    def test_early_negative_index_return_ranks_first(self, metaphone_kb):
        ranked = rank_paths(candidate_paths_for_return(CONTAINS, FALSY, metaphone_kb), metaphone_kb)
        assert [ob.outcome for ob in ranked[0].obligations] == [False]
        keys = [rank_key(path, metaphone_kb) for path in ranked]
        assert keys == sorted(keys)

    def test_constant_contradiction_has_no_candidates(self, compile_one):
        kb = build_kb(compile_one("""
class Always {
    public static bool yes() {
        return true;
    }
}
"""))
        assert candidate_paths_for_return("Always#yes/()", FALSY, kb) == []

    def test_expression_return_is_kept(self, compile_one):
        kb = build_kb(compile_one("""
class Sign {
    public static bool positive(int x) {
        return x > 0;
    }
}
"""))
        candidates = candidate_paths_for_return("Sign#positive/(int)", TRUTHY, kb)
        assert len(candidates) == 1
        predicate = derive_param_predicate("Sign#positive/(int)", candidates[0], TRUTHY, kb)
        assert predicate.atoms["x"].lower == 1

    def test_ties_keep_enumeration_order(self, compile_one):
        kb = build_kb(compile_one("""
class Even {
    public static int pick(int x) {
        if (x > 0) {
            return 1;
        }
        return 2;
    }
}
"""))
        paths = kb.paths_of("Even#pick/(int)")
        assert rank_paths(paths, kb) == paths
        assert rank_paths(paths[:1], kb) == paths[:1]


class TestPredicates:
    def test_interval_intersection(self):
        merged = intersect_atoms(int_atom(">=", 3), int_atom("<", 5))
        assert merged.render("p") == ["3 <= p < 5"]
        assert [v for v in range(-8, 9) if merged.holds(v)] == [3, 4]

    def test_identity_and_contradiction(self):
        atom = ParamPredicate(atoms={"p": int_atom("<", 0)})
        assert intersect_predicates([atom, ParamPredicate()]) == atom
        assert intersect_predicates([atom, ParamPredicate(atoms={"p": int_atom(">", 0)})]).empty

    def test_random_pairs_match_set_intersection(self):
        rng = random.Random(7)
        domain = range(-8, 9)
        for _ in range(1000):
            a = int_atom(rng.choice(OPS), rng.randint(-8, 8))
            b = int_atom(rng.choice(OPS), rng.randint(-8, 8))
            expected = {v for v in domain if a.holds(v) and b.holds(v)}
            merged = intersect_atoms(a, b)
            if merged is None:
                assert not {v for v in range(-40, 41) if a.holds(v) and b.holds(v)}
            else:
                assert {v for v in domain if merged.holds(v)} == expected

    def test_negative_index_path(self, metaphone_kb):
        path = path_with(metaphone_kb, CONTAINS, [False])
        predicate = derive_param_predicate(CONTAINS, path, FALSY, metaphone_kb)
        assert isinstance(predicate, ParamPredicate)
        assert list(predicate.atoms) == ["index"]
        assert predicate.render() == ["index < 0"]

    def test_constant_vowels_become_a_char_set(self, metaphone_kb):
        path = path_with(metaphone_kb, IS_VOWEL, [True])
        predicate = derive_param_predicate(IS_VOWEL, path, TRUTHY, metaphone_kb)
        assert predicate.atoms["c"].allowed == "AEIOUY"

    def test_mutable_field_guard_is_delegated(self, compile_one):
        kb = build_kb(compile_one("""
class Vowels {
    private static string SET = "AEIOUY";

    public static bool isVowel(char c) {
        if (indexOf(SET, c) != -1) {
            return true;
        }
        return false;
    }

    public static void reset(string value) {
        SET = value;
    }
}
"""))
        focal = "Vowels#isVowel/(char)"
        derived = derive_param_predicate(focal, path_with(kb, focal, [True]), TRUTHY, kb)
        assert isinstance(derived, Unresolved)
        assert len(derived.guards) == 1
        assert "indexOf(SET, c)" in derived.guards[0]

    def test_field_written_by_a_callee_is_not_folded(self, compile_one):
        kb = build_kb(compile_one("""
class Level {
    private static int level = 0;

    public static void raise() {
        level = level + 1;
    }

    public static bool over(int x) {
        level = 5;
        raise();
        if (level > x) {
            return true;
        }
        return false;
    }
}
"""))
        focal = "Level#over/(int)"
        derived = derive_param_predicate(focal, path_with(kb, focal, [True]), TRUTHY, kb)
        assert isinstance(derived, Unresolved)
        assert any("level > x" in guard for guard in derived.guards)

    def test_guardless_path_is_unconstrained(self, corpus_kb):
        focal = "Dog#noise/()"
        predicate = derive_param_predicate(focal, corpus_kb.path(focal, 0), None, corpus_kb)
        assert predicate.unconstrained


class TestResolution:
    def test_contains_false_resolves_to_negative_index(self, metaphone_kb):
        context = distill(CONDITION, path_with(metaphone_kb, CONDITION, [False, True]), metaphone_kb)
        result, = context.resolutions
        assert result.callee == CONTAINS
        assert result.status == ResolutionStatus.RESOLVED
        assert result.predicate.render() == ["index < 0"]
        assert [ob.outcome for ob in result.chosen_path.obligations] == [False]
        assert result.children == []
        assert result.call_text == "contains(value, index)"

    def test_unsatisfiable_when_no_path_returns(self, metaphone_kb):
        call = metaphone_kb.deps_of(CONDITION, 0).calls[0].model_copy(
            update={"required_return": ReturnConstraint(kind=ReturnKind.EQUALS, value=7)},
        )
        result = resolve_dependent_method(call, metaphone_kb)
        assert result.status == ResolutionStatus.UNSATISFIABLE

    def test_deep_chain_resolves_with_enough_depth(self, corpus_kb):
        top = "Chain#top/(int)"
        result, = distill(top, path_with(corpus_kb, top, [True]), corpus_kb, depth=3).resolutions
        assert result.callee == "Chain#f/(int)"
        assert result.status == ResolutionStatus.RESOLVED
        assert result.predicate.atoms["x"].lower == 3
        assert result.children[0].children[0].callee == "Chain#h/(int)"

    def test_depth_exhaustion_is_delegated(self, corpus_kb):
        top = "Chain#top/(int)"
        result, = distill(top, path_with(corpus_kb, top, [True]), corpus_kb, depth=1).resolutions
        deepest = result.children[0].children[0]
        assert deepest.status == ResolutionStatus.UNRESOLVED
        assert deepest.reason == "recursion depth exhausted"
        assert result.status == ResolutionStatus.UNRESOLVED

    def test_resolved_predicates_are_sound(self, corpus_kb, corpus_model):
        """Inputs satisfying a resolved predicate drive the callee down its chosen path to the
        required return; inputs violating a leaf predicate never do."""
        satisfied, violated, _ = assert_predicates_sound(corpus_model, corpus_kb)
        assert satisfied > 0
        assert violated > 0

    def test_instance_and_nested_predicates_are_sound(self, compile_one):
        model = compile_one(SENSORS)
        satisfied, violated, seen = assert_predicates_sound(model, build_kb(model))
        assert satisfied > 0 and violated > 0
        assert {"Meter", "Scaled"} <= {runtime for _, runtime, _ in seen}
        nested = {callee for callee, runtime, nested in seen if nested and runtime is not None}
        assert "Sensor#check/(int)" in nested


class TestDistill:
    def test_running_example_context(self, metaphone_kb):
        path = path_with(metaphone_kb, CONDITION, [False, True])
        context = distill(CONDITION, path, metaphone_kb)
        assert context.invocation.kind == InvocationKind.INSTANCE_REFLECTIVE
        assert context.variables == []
        assert context.needs_reflection
        assert not context.infeasible
        assert context.obligations_rendered == render_obligations(metaphone_kb.cfg_of(CONDITION), path)
        assert context.obligations_rendered[0].endswith("is false (line 7)")

    def test_callee_path_respects_the_focal_guards(self, metaphone_kb):
        # index <= 1 is false here, so the negative-index path of contains cannot be used
        context = distill(CONDITION, path_with(metaphone_kb, CONDITION, [False, False, True]), metaphone_kb)
        assert not context.infeasible
        contains = context.resolutions[0]
        assert contains.callee == CONTAINS
        assert contains.status != ResolutionStatus.UNSATISFIABLE
        assert [ob.outcome for ob in contains.chosen_path.obligations] != [False]

    def test_branchless_static_focal(self, compile_one):
        kb = build_kb(compile_one("""
class Plain {
    public static int one() {
        return 1;
    }
}
"""))
        context = distill("Plain#one/()", kb.path("Plain#one/()", 0), kb)
        assert context.invocation.kind == InvocationKind.STATIC_DIRECT
        assert context.variables == [] and context.resolutions == []
        assert not context.infeasible

    def test_contradictory_calls_are_infeasible(self, corpus_kb):
        focal = "MathUtil#twice/(int)"
        context = distill(focal, path_with(corpus_kb, focal, [True, False]), corpus_kb)
        assert context.infeasible
        assert {r.status for r in context.resolutions} == {ResolutionStatus.UNSATISFIABLE}
        assert not distill(focal, path_with(corpus_kb, focal, [False]), corpus_kb).infeasible

    def test_fields_written_by_a_callee_are_not_assumed_unchanged(self, compile_one):
        model = compile_one("""
class Tally {
    private int count = 0;

    public bool check() {
        count = 0;
        bump();
        if (count > 0) {
            return true;
        }
        return false;
    }

    public void bump() {
        count = count + 1;
    }
}
""")
        kb = build_kb(model)
        search = BruteForceSearch(model, kb, Domains.small())
        focal = "Tally#check/()"
        assert search.find_input(focal, path_with(kb, focal, [True])) is not None
        assert search.find_input(focal, path_with(kb, focal, [False])) is None
        for path in kb.paths_of(focal):
            if search.find_input(focal, path) is not None:
                assert not distill(focal, path, kb).infeasible, path.id

    def test_canonical_json_is_stable(self, metaphone_kb):
        path = metaphone_kb.path(CONDITION, 2)
        assert distill(CONDITION, path, metaphone_kb).canonical_json() == \
            distill(CONDITION, path, metaphone_kb).canonical_json()
