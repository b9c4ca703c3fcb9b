"""Type facts, CFGs, path enumeration, data-flow dependencies and the JSON graph format."""

import json
import random

import pytest

from knowledge.cfg import build_cfg
from knowledge.paths import enumerate_paths
from knowledge.persistence import FORMAT_VERSION, dumps_kb, load_kb, loads_kb, save_kb
from knowledge.store import build_kb
from models.errors import AbstractMethodError, MalformedInputError, NotFoundError, VersionMismatchError
from models.knowledge import EDGE_ORDER, Cfg, CfgEdge, CfgNode, EdgeLabel, NodeKind, ReturnKind

from conftest import CONDITION, CONTAINS, IS_VOWEL

INCREMENT = "Counter#increment/(int)"


def random_cfg(rng: random.Random, size: int) -> Cfg:
    """Entry, exit and a mix of statement and branch nodes with arbitrary back edges."""
    ids = [f"m:R#r/()/n:{i}" for i in range(size)]
    kinds = [NodeKind.ENTRY] + [
        rng.choice((NodeKind.STATEMENT, NodeKind.BRANCH)) for _ in range(size - 2)
    ] + [NodeKind.EXIT]
    edges = []
    for i, kind in enumerate(kinds):
        if kind == NodeKind.EXIT:
            continue
        if kind == NodeKind.BRANCH:
            edges.append(CfgEdge(source=ids[i], target=ids[rng.randrange(1, size)], label=EdgeLabel.TRUE))
            edges.append(CfgEdge(source=ids[i], target=ids[rng.randrange(1, size)], label=EdgeLabel.FALSE))
        else:
            edges.append(CfgEdge(source=ids[i], target=ids[rng.randrange(1, size)], label=EdgeLabel.SEQ))
    nodes = [CfgNode(id=ids[i], kind=kind) for i, kind in enumerate(kinds)]
    return Cfg(method="R#r/()", nodes=nodes, edges=edges)


def simple_paths(cfg: Cfg):
    """Reference enumeration: recursive DFS over simple entry-to-exit walks."""
    kinds = {node.id: node.kind for node in cfg.nodes}
    found = []

    def visit(node, walk, obligations):
        for edge in sorted(cfg.successors(node), key=lambda e: EDGE_ORDER[e.label]):
            if edge.target in walk:
                continue
            step = list(obligations)
            if kinds[edge.source] == NodeKind.BRANCH:
                step.append((edge.source, edge.label == EdgeLabel.TRUE))
            if edge.target == cfg.exit:
                found.append((walk + [edge.target], step))
            else:
                visit(edge.target, walk + [edge.target], step)

    visit(cfg.entry, [cfg.entry], [])
    return found


class TestTypeFacts:
    def test_field_constancy(self, corpus_kb):
        facts = corpus_kb.facts
        assert facts.field("Counter", "limit").is_constant
        assert not facts.field("Counter", "count").is_constant
        assert facts.field("Counter", "count").is_mutated
        assert not facts.field("Thermostat", "setpoint").is_constant
        assert facts.field("Metaphone", "TARGET").initializer == "C"

    def test_hierarchy_queries(self, corpus_kb):
        facts = corpus_kb.facts
        assert facts.concrete_classes_under("Animal") == ["Bird", "Dog", "Puppy"]
        assert facts.chain("Puppy") == ["Puppy", "Dog", "Animal"]
        assert facts.distance("Puppy", "Animal") == 2
        assert facts.distance("Dog", "Bird") is None
        assert not facts.class_fact("Shape").instantiable

    def test_unknown_names_raise(self, corpus_kb):
        with pytest.raises(NotFoundError):
            corpus_kb.facts.method("Nope#x/()")
        with pytest.raises(NotFoundError):
            corpus_kb.facts.field("Counter", "nope")


class TestCfg:
    def test_loop_guard_copy_shares_branch_keys(self, metaphone_model):
        cfg = build_cfg(metaphone_model.method(CONTAINS), metaphone_model)
        branches = cfg.branch_nodes()
        assert len(branches) == 5
        assert len({node.branch for node in branches}) == 3
        assert sum(node.loop_head for node in branches) == 1
        assert cfg.nodes[0].kind == NodeKind.ENTRY

    def test_calls_are_lifted_into_temporaries(self, metaphone_model):
        cfg = build_cfg(metaphone_model.method(CONDITION), metaphone_model)
        calls = [node.call for node in cfg.nodes if node.kind == NodeKind.CALL]
        assert [c.name for c in calls] == ["contains", "charAt", "isVowel"]
        assert [c.result for c in calls] == ["$t0", "$t1", "$t2"]
        assert calls[1].is_builtin

    def test_abstract_method_has_no_cfg(self, corpus_model):
        with pytest.raises(AbstractMethodError):
            build_cfg(corpus_model.method("Shape#area/(int)"), corpus_model)


class TestPaths:
    def test_running_example_path_counts(self, metaphone_kb):
        assert len(metaphone_kb.paths_of(CONTAINS)) == 6
        assert len(metaphone_kb.paths_of(CONDITION)) == 4
        assert len(metaphone_kb.paths_of(IS_VOWEL)) == 2

    def test_true_edge_is_explored_first(self, metaphone_kb):
        first, *_, last = metaphone_kb.paths_of(CONTAINS)
        assert first.obligations[0].outcome is True
        assert [ob.outcome for ob in last.obligations] == [False]

    def test_path_ids(self, metaphone_kb):
        assert metaphone_kb.path(CONTAINS, 3).id == f"{CONTAINS}/p:3"
        with pytest.raises(NotFoundError):
            metaphone_kb.path(CONTAINS, 6)

    def test_cap_truncates(self, metaphone_model):
        cfg = build_cfg(metaphone_model.method(CONTAINS), metaphone_model)
        enumeration = enumerate_paths(cfg, cap=2)
        assert len(enumeration.paths) == 2
        assert enumeration.truncated

    def test_kb_records_truncation(self, metaphone_model):
        kb = build_kb(metaphone_model, path_cap=3)
        assert kb.is_truncated(CONTAINS)
        assert not kb.is_truncated(IS_VOWEL)

    def test_kb_matches_direct_enumeration(self, metaphone_model, metaphone_kb):
        for method_id in (CONDITION, CONTAINS, IS_VOWEL):
            direct = enumerate_paths(build_cfg(metaphone_model.method(method_id), metaphone_model))
            assert [p.id for p in direct.paths] == [p.id for p in metaphone_kb.paths_of(method_id)]
            assert direct.paths == metaphone_kb.paths_of(method_id)

    def test_random_graphs_match_simple_path_enumeration(self):
        rng = random.Random(20240521)
        for _ in range(200):
            cfg = random_cfg(rng, rng.randrange(3, 13))
            enumeration = enumerate_paths(cfg, cap=100_000)
            assert not enumeration.truncated
            got = [
                (path.node_ids, [(ob.node, ob.outcome) for ob in path.obligations])
                for path in enumeration.paths
            ]
            assert got == simple_paths(cfg)
            for path in enumeration.paths:
                assert len(set(path.node_ids)) == len(path.node_ids)
                assert path.node_ids[-1] == cfg.exit


class TestDataflow:
    def test_dependent_calls_carry_return_constraints(self, metaphone_kb):
        deps = metaphone_kb.deps_of(CONDITION, 0)
        assert [c.method_id for c in deps.calls] == [CONTAINS]
        assert deps.calls[0].required_return.kind == ReturnKind.TRUTHY

        deps = metaphone_kb.deps_of(CONDITION, 2)
        assert [c.method_id for c in deps.calls] == [CONTAINS, IS_VOWEL]
        assert [c.required_return.kind for c in deps.calls] == [ReturnKind.FALSY, ReturnKind.TRUTHY]

    def test_builtin_arguments_expose_field_reads(self, metaphone_kb):
        fields = [v.field for v in metaphone_kb.deps_of(CONTAINS, 0).variables]
        assert "Metaphone.TARGET" in fields

    def test_fields_in_guards_are_dependent_variables(self, corpus_kb):
        assert corpus_kb.deps_of(INCREMENT, 0).variables == []
        fields = [v.field for v in corpus_kb.deps_of(INCREMENT, 1).variables]
        assert fields == ["Counter.count", "Counter.limit"]

    def test_call_graph(self, metaphone_kb, corpus_kb):
        assert CONDITION in metaphone_kb.callers_of(CONTAINS)
        assert "contains(string,int)" in metaphone_kb.callees_of(CONDITION)
        assert "Animal#react/(int)" in corpus_kb.callers_of("Puppy#noise/()")


class TestStore:
    def test_method_lookup_forms(self, corpus_kb):
        assert corpus_kb.method_of("Counter.increment").id == INCREMENT
        assert corpus_kb.method_of("Counter#increment").id == INCREMENT
        assert corpus_kb.method_of(INCREMENT).id == INCREMENT
        with pytest.raises(NotFoundError):
            corpus_kb.method_of("noise")

    def test_dispatch_through_facts(self, corpus_kb):
        assert corpus_kb.dispatch("Puppy", "react(int)").owner == "Animal"
        assert corpus_kb.dispatch("Dog", "fly()") is None


class TestPersistence:
    def test_round_trip_is_byte_identical(self, corpus_kb):
        text = dumps_kb(corpus_kb)
        assert dumps_kb(loads_kb(text)) == text

    def test_two_builds_serialize_identically(self, corpus_model):
        assert dumps_kb(build_kb(corpus_model)) == dumps_kb(build_kb(corpus_model))

    def test_reloaded_kb_answers_queries(self, metaphone_kb):
        kb = loads_kb(dumps_kb(metaphone_kb))
        assert kb.paths_of(CONTAINS) == metaphone_kb.paths_of(CONTAINS)
        assert kb.deps_of(CONDITION, 2) == metaphone_kb.deps_of(CONDITION, 2)
        assert kb.callers_of(CONTAINS) == metaphone_kb.callers_of(CONTAINS)

    def test_save_and_load(self, metaphone_kb, tmp_path):
        target = tmp_path / "kb.json"
        save_kb(metaphone_kb, target)
        assert load_kb(target).facts == metaphone_kb.facts

    def test_version_mismatch(self, metaphone_kb):
        document = json.loads(dumps_kb(metaphone_kb))
        document["format_version"] = FORMAT_VERSION + 1
        with pytest.raises(VersionMismatchError):
            loads_kb(json.dumps(document))

    def test_missing_version_is_malformed_not_a_mismatch(self, metaphone_kb):
        document = json.loads(dumps_kb(metaphone_kb))
        del document["format_version"]
        with pytest.raises(MalformedInputError):
            loads_kb(json.dumps(document))

    def test_malformed_documents(self):
        with pytest.raises(MalformedInputError):
            loads_kb("{not json")
        with pytest.raises(MalformedInputError):
            loads_kb(json.dumps({"format_version": FORMAT_VERSION}))
        with pytest.raises(MalformedInputError):
            loads_kb("[]")
