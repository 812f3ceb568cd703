"""Synthetic benchmarks with planted gold paths.

The question benchmark is built from blocks of two subjects that share two
candidate objects with crossed gold assignments: subject A has color o1 and
shape o2 while subject B has color o2 and shape o1. Every graph also holds
two context-entity facts that pair each object with the opposite relation.
Consequences, by construction:

- The gold object is identifiable only by finding the one evidence whose
  text contains both the question entity and the queried relation, so a
  model must route evidence selectively (planted gold path).
- Under uniform attention each candidate aggregates the same relation and
  subject token mass, differing only in its own label, and the crossed
  assignment makes any label-based rule wrong on half the questions.
- The same evidence set serves both turns of a conversation with different
  golds, so memorizing graphs without reading the SR cannot work either.

Also provides random graph instances for property tests and large graphs
for pruning-semantics checks.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .evidence import EvidenceStore, cap_bm25, ingest_snapshot, retrieve
from .evaluation import BenchmarkConversation, BenchmarkTurn
from .graph import GraphInstance, build_graph
from .sr import StructuredRepresentation

RELATIONS = ("color", "shape")
FILLER_RELATION = "note"
ANSWER_TYPE = "thing"


def _fact(fact_id, subject_id, subject_label, predicate, object_id, object_label):
    return {"id": fact_id,
            "subject": {"id": subject_id, "label": subject_label, "type": "topic"},
            "predicate": predicate,
            "object": {"id": object_id, "label": object_label, "type": ANSWER_TYPE}}


@dataclass
class SyntheticBenchmark:
    store: EvidenceStore
    conversations: list[BenchmarkConversation]
    instances: list[GraphInstance]


def synthetic_benchmark(num_conversations: int = 20,
                        workdir: str | None = None) -> SyntheticBenchmark:
    """Build the crossed-assignment benchmark through real ingestion.

    Each conversation has two turns (color, then shape) about one subject,
    with gold SRs attached. One graph instance per question is produced by
    running actual retrieval and graph construction with the gold SR; the
    instance graphs stay small (6 evidences, 5 entities).
    """
    facts = []
    conversations = []
    plan = []
    for c in range(num_conversations):
        block, side = divmod(c, 2)
        subj_id, subj = f"S{c}", f"subj{c}"
        hub_id, hub = f"H{c}", f"hub{c}"
        junk_id, junk = f"J{c}", f"junk{c}"
        objects = [(f"O{block}a", f"obj{block}a"), (f"O{block}b", f"obj{block}b")]
        # crossed assignment: the second subject of a block flips the mapping
        gold = {"color": objects[side], "shape": objects[1 - side]}
        n = len(facts)
        facts.append(_fact(f"f{n}", subj_id, subj, "color", *gold["color"]))
        facts.append(_fact(f"f{n+1}", subj_id, subj, "shape", *gold["shape"]))
        facts.append(_fact(f"f{n+2}", subj_id, subj, FILLER_RELATION, junk_id, junk))
        # hub facts pair each object with the opposite relation
        facts.append(_fact(f"f{n+3}", hub_id, hub, "color", *gold["shape"]))
        facts.append(_fact(f"f{n+4}", hub_id, hub, "shape", *gold["color"]))
        facts.append(_fact(f"f{n+5}", hub_id, hub, FILLER_RELATION, junk_id, junk))

        turns = []
        for i, relation in enumerate(RELATIONS):
            if i == 0:
                question = f"regarding {hub}, what is the {relation} of {subj}?"
            else:
                question = f"and what is the {relation} of {subj}?"
            sr = StructuredRepresentation(hub, subj, relation, ANSWER_TYPE)
            gold_id, gold_label = gold[relation]
            turns.append(BenchmarkTurn(question, ((gold_id, gold_label),), sr))
            plan.append((f"c{c}-t{i+1}", sr, (gold_id,)))
        conversations.append(BenchmarkConversation(f"c{c}", tuple(turns)))

    store = _store_from_facts(facts, workdir)
    instances = []
    for graph_id, sr, gold_ids in plan:
        evidences = cap_bm25(retrieve(sr, store), sr.text_without_delimiters(), 500)
        instances.append(GraphInstance(graph_id, build_graph(evidences),
                                       gold_ids, sr))
    return SyntheticBenchmark(store, conversations, instances)


def _store_from_facts(facts, workdir: str | None) -> EvidenceStore:
    import tempfile
    own = workdir is None
    directory = tempfile.mkdtemp(prefix="graphqa-synth-") if own else workdir
    os.makedirs(directory, exist_ok=True)
    paths = {name: os.path.join(directory, name + ".jsonl")
             for name in ("facts", "text", "tables", "infoboxes")}
    with open(paths["facts"], "w", encoding="utf-8") as handle:
        for fact in facts:
            handle.write(json.dumps(fact) + "\n")
    for name in ("text", "tables", "infoboxes"):
        open(paths[name], "w").close()
    return ingest_snapshot(paths["facts"], paths["text"], paths["tables"],
                           paths["infoboxes"])


def random_graph_instance(seed: int, num_evidences: int,
                          entity_pool: int | None = None,
                          vocab_size: int = 40) -> GraphInstance:
    """A random connected bipartite instance for property tests.

    Tokens are alphabetic so no temporal pseudo-entities sneak in; every
    evidence mentions 1-4 entities from a shared pool, which keeps nodes
    merged across evidences.
    """
    rng = np.random.default_rng(seed)
    if entity_pool is None:
        entity_pool = max(2, num_evidences // 2 + 1)
    words = [f"word{chr(ord('a') + i % 26)}{i}" for i in range(vocab_size)]
    from .evidence import EntityRef, Evidence

    entities = [EntityRef(f"E{i}", f"entity {words[i % vocab_size]}",
                          str(rng.choice(["human", "film", "book", ""])))
                for i in range(entity_pool)]
    evidences = []
    for i in range(num_evidences):
        n_mentions = int(rng.integers(1, 5))
        picks = rng.choice(entity_pool, size=min(n_mentions, entity_pool),
                           replace=False)
        text_words = [words[int(w)] for w in rng.integers(0, vocab_size, size=6)]
        text = " ".join(text_words + [entities[int(p)].label for p in picks])
        evidences.append(Evidence(
            f"ev{i:04d}", str(rng.choice(["kb", "text", "table", "infobox"])),
            text, anchor_entities=tuple(entities[int(p)] for p in picks)))
    graph = build_graph(evidences)
    gold_entity = entities[int(rng.integers(0, entity_pool))]
    sr = StructuredRepresentation(
        " ".join(words[int(w)] for w in rng.integers(0, vocab_size, size=2)),
        " ".join(words[int(w)] for w in rng.integers(0, vocab_size, size=2)),
        " ".join(words[int(w)] for w in rng.integers(0, vocab_size, size=3)),
        str(rng.choice(["human", "film", ""])))
    return GraphInstance(f"rand{seed}", graph, (gold_entity.id,), sr)
