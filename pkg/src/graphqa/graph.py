"""Bipartite entity-evidence answer graphs.

Nodes are entities and evidences; an edge joins entity e and evidence ev
exactly when ev mentions e, is anchored to e, or e is a temporal expression
detected in ev's text. There are never entity-entity or evidence-evidence
edges. Entities with the same KB id merge into one node even when their
surface labels differ. Graphs are immutable after construction; shrinking
produces a new graph over the top-scored evidences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .dates import detect_temporal_expressions
from .evidence import EntityRef, Evidence
from .sr import StructuredRepresentation, parse_sr, serialize_sr


def detect_temporal_entities(text: str) -> list[tuple[str, tuple[int, int]]]:
    """Dates and years in text, as (ISO form, character span) pairs.

    Full dates normalize to YYYY-MM-DD, bare years to YYYY. Each becomes a
    date pseudo-entity via temporal_entity_ref.
    """
    return detect_temporal_expressions(text)


def temporal_entity_ref(iso: str) -> EntityRef:
    return EntityRef("date:" + iso, iso, "date")


@dataclass(frozen=True)
class EntityNode:
    entity: EntityRef
    evidence_ids: tuple[str, ...]


@dataclass(frozen=True)
class EvidenceNode:
    evidence: Evidence
    entity_ids: tuple[str, ...]


class AnswerGraph:
    """Immutable bipartite graph; node dicts are keyed by id and the
    sorted-id orders returned by entity_ids/evidence_ids are the canonical
    node orderings used everywhere downstream."""

    def __init__(self, entity_nodes: dict[str, EntityNode],
                 evidence_nodes: dict[str, EvidenceNode],
                 dropped_evidence_ids: tuple[str, ...] = ()):
        self.entity_nodes = entity_nodes
        self.evidence_nodes = evidence_nodes
        self.dropped_evidence_ids = dropped_evidence_ids

    def entity_ids(self) -> list[str]:
        return sorted(self.entity_nodes)

    def evidence_ids(self) -> list[str]:
        return sorted(self.evidence_nodes)

    @property
    def num_entities(self) -> int:
        return len(self.entity_nodes)

    @property
    def num_evidences(self) -> int:
        return len(self.evidence_nodes)

    def edges(self) -> set[tuple[str, str]]:
        return {(entity_id, ev_id)
                for ev_id, node in self.evidence_nodes.items()
                for entity_id in node.entity_ids}

    def evidences(self) -> list[Evidence]:
        return [self.evidence_nodes[ev_id].evidence for ev_id in self.evidence_ids()]


def linked_entities(evidence: Evidence) -> list[EntityRef]:
    """Mentioned, anchored, and detected temporal entities, deduplicated."""
    refs: dict[str, EntityRef] = {}
    for ref in evidence.entities():
        refs.setdefault(ref.id, ref)
    for iso, _ in detect_temporal_expressions(evidence.text):
        ref = temporal_entity_ref(iso)
        refs.setdefault(ref.id, ref)
    return list(refs.values())


def build_graph(evidences) -> AnswerGraph:
    """Graph over the given evidences; zero-entity evidences are dropped.

    Deterministic and order-insensitive: internal processing is by sorted
    evidence id, so permuting the input yields an identical graph.
    """
    by_id: dict[str, Evidence] = {}
    for evidence in evidences:
        if evidence.id in by_id:
            raise ValueError(f"duplicate evidence id {evidence.id!r}")
        by_id[evidence.id] = evidence

    entity_refs: dict[str, EntityRef] = {}
    incident_evidences: dict[str, list[str]] = {}
    evidence_nodes: dict[str, EvidenceNode] = {}
    dropped: list[str] = []
    for ev_id in sorted(by_id):
        evidence = by_id[ev_id]
        linked = linked_entities(evidence)
        if not linked:
            dropped.append(ev_id)
            continue
        for ref in linked:
            entity_refs.setdefault(ref.id, ref)
            incident_evidences.setdefault(ref.id, []).append(ev_id)
        evidence_nodes[ev_id] = EvidenceNode(
            evidence, tuple(sorted(ref.id for ref in linked)))

    entity_nodes = {
        entity_id: EntityNode(entity_refs[entity_id], tuple(sorted(ev_ids)))
        for entity_id, ev_ids in incident_evidences.items()}
    return AnswerGraph(entity_nodes, evidence_nodes, tuple(dropped))


def shrink_graph(graph: AnswerGraph, evidence_scores: dict[str, float],
                 k: int) -> AnswerGraph:
    """Subgraph over the k highest-scoring evidences and their entities.

    Ties at the cutoff break by ascending evidence id. When k covers every
    evidence the input graph is returned as-is.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    for ev_id in graph.evidence_nodes:
        if ev_id not in evidence_scores:
            raise ValueError(f"missing score for evidence {ev_id!r}")
    if k >= graph.num_evidences:
        return graph
    keep = sorted(graph.evidence_nodes,
                  key=lambda ev_id: (-evidence_scores[ev_id], ev_id))[:k]
    kept = set(keep)
    evidence_nodes = {ev_id: graph.evidence_nodes[ev_id] for ev_id in kept}
    incident: dict[str, list[str]] = {}
    for ev_id in sorted(kept):
        for entity_id in evidence_nodes[ev_id].entity_ids:
            incident.setdefault(entity_id, []).append(ev_id)
    entity_nodes = {
        entity_id: EntityNode(graph.entity_nodes[entity_id].entity, tuple(ev_ids))
        for entity_id, ev_ids in incident.items()}
    return AnswerGraph(entity_nodes, evidence_nodes, graph.dropped_evidence_ids)


@dataclass(frozen=True)
class GraphInstance:
    """One training or evaluation item: a graph, the gold answer entities,
    and optionally the SR the question was reduced to."""
    graph_id: str
    graph: AnswerGraph
    gold_entity_ids: tuple[str, ...]
    sr: StructuredRepresentation | None = None


def graph_to_record(graph: AnswerGraph, graph_id: str,
                    gold_entity_ids=(), sr=None) -> dict:
    record = {
        "graph_id": graph_id,
        "evidences": [
            {"id": ev_id,
             "text": node.evidence.text,
             "source": node.evidence.source,
             "entity_ids": list(node.entity_ids)}
            for ev_id, node in sorted(graph.evidence_nodes.items())],
        "entities": [
            {"id": entity_id,
             "label": node.entity.label,
             "type": node.entity.kb_type}
            for entity_id, node in sorted(graph.entity_nodes.items())],
        "gold_entity_ids": list(gold_entity_ids),
    }
    if sr is not None:
        record["sr"] = serialize_sr(sr)
    return record


def record_to_instance(record: dict) -> GraphInstance:
    """Rebuild a GraphInstance from one dump record.

    Dumps carry no mention spans, so entity links are restored as anchors;
    build_graph re-detects temporal entities, which merge back into the
    same date ids, giving an identical node and edge structure.
    """
    refs = {ent["id"]: EntityRef(ent["id"], ent.get("label", "") or ent["id"],
                                 ent.get("type", ""))
            for ent in record.get("entities", [])}
    evidences = []
    for ev in record["evidences"]:
        anchors = tuple(refs.get(eid, EntityRef(eid, eid))
                        for eid in ev.get("entity_ids", []))
        evidences.append(Evidence(ev["id"], ev["source"], ev["text"],
                                  anchor_entities=anchors))
    sr = parse_sr(record["sr"]) if "sr" in record else None
    return GraphInstance(str(record["graph_id"]), build_graph(evidences),
                         tuple(record.get("gold_entity_ids", [])), sr)


def dump_instances(instances, path: str):
    with open(path, "w", encoding="utf-8") as handle:
        for inst in instances:
            record = graph_to_record(inst.graph, inst.graph_id,
                                     inst.gold_entity_ids, inst.sr)
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_instances(path: str) -> list[GraphInstance]:
    instances = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                instances.append(record_to_instance(json.loads(line)))
            except (KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: bad graph record ({exc})") from exc
    return instances
