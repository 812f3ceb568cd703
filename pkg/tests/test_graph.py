"""Answer graph construction, shrinking, and dump round trips."""

import json

import pytest

from graphqa.evidence import EntityRef, Evidence, Mention
from graphqa.graph import (GraphInstance, build_graph, dump_instances,
                           graph_to_record, linked_entities, load_instances,
                           shrink_graph)
from graphqa.sr import StructuredRepresentation

A = EntityRef("E1", "Alpha One", "human")
B = EntityRef("E2", "Beta Two", "film")
C = EntityRef("E3", "Gamma Three", "book")


def ev(eid, text, *entities, source="text"):
    return Evidence(eid, source, text, anchor_entities=tuple(entities))


def test_build_graph_links_mentions_and_anchors():
    evidence = Evidence("x1", "text", "Alpha One stars in Beta Two",
                        (Mention(A, 0, 9),), (B,))
    graph = build_graph([evidence])
    assert graph.entity_ids() == ["E1", "E2"]
    assert graph.edges() == {("E1", "x1"), ("E2", "x1")}


def test_build_graph_adds_temporal_entities():
    graph = build_graph([ev("x1", "premiered on 14 May 2009 in Cannes", A)])
    assert "date:2009-05-14" in graph.entity_ids()
    date_node = graph.entity_nodes["date:2009-05-14"]
    assert date_node.entity.kb_type == "date"
    assert date_node.evidence_ids == ("x1",)


def test_build_graph_merges_same_entity_across_evidences():
    graph = build_graph([ev("x1", "first", A, B), ev("x2", "second", A)])
    assert graph.entity_nodes["E1"].evidence_ids == ("x1", "x2")
    assert graph.num_entities == 2
    assert graph.num_evidences == 2


def test_build_graph_drops_entityless_evidence():
    lonely = Evidence("x9", "text", "no names here at all")
    graph = build_graph([ev("x1", "fine", A), lonely])
    assert graph.num_evidences == 1
    assert graph.dropped_evidence_ids == ("x9",)


def test_build_graph_rejects_duplicate_ids():
    with pytest.raises(ValueError):
        build_graph([ev("x1", "a", A), ev("x1", "b", B)])


def test_label_collisions_stay_distinct_by_id():
    twin = EntityRef("E9", "Alpha One", "film")
    graph = build_graph([ev("x1", "both alphas", A, twin)])
    assert graph.entity_ids() == ["E1", "E9"]


def test_linked_entities_dedups_by_id():
    evidence = Evidence("x1", "text", "Alpha One in 2004",
                        (Mention(A, 0, 9),), (A, B))
    ids = [e.id for e in linked_entities(evidence)]
    assert ids == ["E1", "E2", "date:2004"]


def shrunk_ids(scores, k):
    graph = build_graph([ev("x1", "one", A), ev("x2", "two", A, B),
                         ev("x3", "three", B), ev("x4", "four", C)])
    return shrink_graph(graph, scores, k)


def test_shrink_graph_keeps_top_k_by_score_then_id():
    scores = {"x1": 0.4, "x2": 0.4, "x3": 0.9, "x4": 0.1}
    graph = shrunk_ids(scores, 2)
    # x3 best; x1 ties x2 and wins on id
    assert graph.evidence_ids() == ["x1", "x3"]
    assert graph.entity_ids() == ["E1", "E2"]
    assert graph.edges() == {("E1", "x1"), ("E2", "x3")}


def test_shrink_graph_identity_when_k_not_smaller():
    scores = {"x1": 0.4, "x2": 0.4, "x3": 0.9, "x4": 0.1}
    graph = build_graph([ev("x1", "one", A), ev("x2", "two", A, B),
                         ev("x3", "three", B), ev("x4", "four", C)])
    assert shrink_graph(graph, scores, 4) is graph
    assert shrink_graph(graph, scores, 99) is graph


def test_shrink_graph_requires_scores_for_all_evidences():
    with pytest.raises(ValueError):
        shrunk_ids({"x1": 0.5}, 2)
    with pytest.raises(ValueError):
        shrunk_ids({f"x{i}": 0.5 for i in range(1, 5)}, 0)


def test_shrink_graph_never_leaves_isolated_nodes():
    scores = {"x1": 0.9, "x2": 0.2, "x3": 0.3, "x4": 0.8}
    graph = shrunk_ids(scores, 2)
    for node in graph.entity_nodes.values():
        assert node.evidence_ids
    for node in graph.evidence_nodes.values():
        assert node.entity_ids


def test_dump_round_trip_preserves_structure(tmp_path):
    evidence = Evidence("x1", "kb", "Alpha One stars in Beta Two on 14 May 2009",
                        (Mention(A, 0, 9),), (B,))
    graph = build_graph([evidence, ev("x2", "Alpha One again", A)])
    sr = StructuredRepresentation("Alpha One", "Beta Two", "stars in", "film")
    original = GraphInstance("g1", graph, ("E2",), sr)
    path = tmp_path / "graphs.jsonl"
    dump_instances([original], str(path))
    restored = load_instances(str(path))[0]

    assert restored.graph_id == "g1"
    assert restored.gold_entity_ids == ("E2",)
    assert restored.sr == sr
    assert restored.graph.entity_ids() == graph.entity_ids()
    assert restored.graph.evidence_ids() == graph.evidence_ids()
    assert restored.graph.edges() == graph.edges()
    for eid, node in restored.graph.entity_nodes.items():
        assert node.entity.label == graph.entity_nodes[eid].entity.label
        assert node.entity.kb_type == graph.entity_nodes[eid].entity.kb_type


def test_record_format_is_sorted_and_complete():
    graph = build_graph([ev("x2", "Beta Two", B), ev("x1", "Alpha One", A)])
    record = graph_to_record(graph, "g7", ("E1",))
    assert [e["id"] for e in record["evidences"]] == ["x1", "x2"]
    assert [e["id"] for e in record["entities"]] == ["E1", "E2"]
    assert record["gold_entity_ids"] == ["E1"]
    assert "sr" not in record
    assert record["evidences"][0]["entity_ids"] == ["E1"]


def test_load_instances_names_bad_line(tmp_path):
    path = tmp_path / "graphs.jsonl"
    good = graph_to_record(build_graph([ev("x1", "Alpha One", A)]), "g1")
    path.write_text(json.dumps(good) + "\n" + '{"graph_id": 1}' + "\n")
    with pytest.raises(ValueError, match="graphs.jsonl:2"):
        load_instances(str(path))
