"""Hand-built demo snapshot: a six-turn conversation about a novel.

The fixture covers every evidence source: authorship facts in the KB, a
cast-member fact with a character qualifier, protagonist and plot sentences
in text, a page-count table record, and a running-time infobox entry. The
book and the film share one label on purpose, so retrieval pulls both pages
and the graph has to tell them apart. Page count appears both as a literal
fact object and as an anchored table value; both resolve to the same
pseudo-entity, which is the cross-source merge the pipeline relies on.
"""

from __future__ import annotations

import json
import os
import tempfile

from .evaluation import BenchmarkConversation, BenchmarkTurn
from .evidence import EvidenceStore, cap_bm25, ingest_snapshot, retrieve
from .graph import GraphInstance, build_graph
from .sr import StructuredRepresentation, parse_sr

BOOK = {"id": "Q217008", "label": "Angels and Demons", "type": "written work"}
FILM = {"id": "Q223596", "label": "Angels and Demons", "type": "film"}
BROWN = {"id": "Q7343", "label": "Dan Brown", "type": "human"}
LANGDON = {"id": "Q310594", "label": "Robert Langdon", "type": "fictional human"}
HANKS = {"id": "Q2263", "label": "Tom Hanks", "type": "human"}
HOWARD = {"id": "Q51552", "label": "Ron Howard", "type": "human"}
CERN = {"id": "Q42944", "label": "CERN", "type": "research organization"}

PAGES_ID = "literal:768"
RUNTIME_ID = "literal:2 h 18 min"


def _anchor(text: str, surface: str, entity_id: str) -> dict:
    start = text.index(surface)
    return {"span": [start, start + len(surface)], "entity_id": entity_id}


def _demo_records() -> dict[str, list[dict]]:
    protagonist = "Robert Langdon is the protagonist of Dan Brown's bestselling novels."
    plot = "In the novel, Robert Langdon is flown to CERN, the research headquarters near Geneva."
    casting = "Tom Hanks starred in the film adaptation directed by Ron Howard."
    facts = [
        {"id": "fact-authorship", "subject": BOOK, "predicate": "author",
         "object": BROWN},
        {"id": "fact-cast", "subject": FILM, "predicate": "cast member",
         "object": HANKS,
         "qualifiers": [{"predicate": "character", "object": LANGDON}]},
        {"id": "fact-pages", "subject": BOOK, "predicate": "number of pages",
         "object": {"literal": "768"}},
        {"id": "fact-director", "subject": FILM, "predicate": "director",
         "object": HOWARD},
        {"id": "fact-publication", "subject": BOOK, "predicate": "publication date",
         "object": {"literal": "2000"}},
        {"id": "fact-adaptation", "subject": FILM, "predicate": "based on",
         "object": BOOK},
    ]
    texts = [
        {"id": "text-protagonist", "page_entity_id": BROWN["id"],
         "sentence": protagonist,
         "anchors": [_anchor(protagonist, "Robert Langdon", LANGDON["id"]),
                     _anchor(protagonist, "Dan Brown", BROWN["id"])]},
        {"id": "text-plot", "page_entity_id": BOOK["id"], "sentence": plot,
         "anchors": [_anchor(plot, "Robert Langdon", LANGDON["id"]),
                     _anchor(plot, "CERN", CERN["id"])]},
        {"id": "text-casting", "page_entity_id": HANKS["id"], "sentence": casting,
         "anchors": [_anchor(casting, "Tom Hanks", HANKS["id"]),
                     _anchor(casting, "Ron Howard", HOWARD["id"])]},
    ]
    tables = [
        {"id": "table-pages", "page_entity_id": BOOK["id"],
         "row_entity_label": BOOK["label"],
         "pairs": [{"attribute": "pages", "value": "768",
                    "anchors": [{"span": [0, 3], "entity_id": PAGES_ID}]}]},
    ]
    infoboxes = [
        {"id": "infobox-runtime", "page_entity_id": FILM["id"],
         "attribute": "running time", "value": "2 h 18 min",
         "anchors": [{"span": [0, 10], "entity_id": RUNTIME_ID}]},
        {"id": "infobox-author", "page_entity_id": BOOK["id"],
         "attribute": "author", "value": "Dan Brown",
         "anchors": [{"span": [0, 9], "entity_id": BROWN["id"]}]},
    ]
    return {"facts": facts, "text": texts, "tables": tables,
            "infoboxes": infoboxes}


def write_demo_snapshot(directory: str) -> dict[str, str]:
    """Write the four snapshot files; returns name -> path."""
    os.makedirs(directory, exist_ok=True)
    paths = {}
    for name, records in _demo_records().items():
        path = os.path.join(directory, name + ".jsonl")
        with open(path, "w", encoding="utf-8") as handle:
            for record in records:
                handle.write(json.dumps(record) + "\n")
        paths[name] = path
    return paths


def demo_store(directory: str | None = None) -> EvidenceStore:
    if directory is None:
        directory = tempfile.mkdtemp(prefix="graphqa-demo-")
    paths = write_demo_snapshot(directory)
    return ingest_snapshot(paths["facts"], paths["text"], paths["tables"],
                           paths["infoboxes"])


# question, SR (context|question|relation|type), gold answer (id, label)
_DEMO_TURNS = [
    ("Who wrote the book Angels and Demons?",
     "Angels and Demons|Angels and Demons|wrote the book|human",
     (BROWN["id"], BROWN["label"])),
    ("the main character in his books?",
     "Angels and Demons|Dan Brown|the main character in his books|human",
     (LANGDON["id"], LANGDON["label"])),
    ("who played him in the films?",
     "Angels and Demons|Robert Langdon|who played him in the films|human",
     (HANKS["id"], HANKS["label"])),
    ("to which headquarters was robert flown in the book?",
     "Angels and Demons|Robert Langdon|to which headquarters was robert flown in the book|organization",
     (CERN["id"], CERN["label"])),
    ("how long is the novel?",
     "Angels and Demons|Angels and Demons|how long is the novel|number",
     (PAGES_ID, "768")),
    ("what about the movie?",
     "Angels and Demons|Angels and Demons|what about the movie how long|duration",
     (RUNTIME_ID, "2 h 18 min")),
]


def demo_conversation() -> BenchmarkConversation:
    turns = tuple(BenchmarkTurn(question, ((gold_id, gold_label),), parse_sr(sr))
                  for question, sr, (gold_id, gold_label) in _DEMO_TURNS)
    return BenchmarkConversation("demo", turns)


def demo_instances(store: EvidenceStore,
                   retrieval_cap: int = 500) -> list[GraphInstance]:
    """One graph instance per demo turn, built with the gold SRs.

    These are the training graphs for overfitting a tiny model on the demo
    fixture; the gold entity ids come from the conversation answers.
    """
    instances = []
    conversation = demo_conversation()
    for index, turn in enumerate(conversation.turns, start=1):
        sr = turn.sr
        assert isinstance(sr, StructuredRepresentation)
        evidences = cap_bm25(retrieve(sr, store), sr.text_without_delimiters(),
                             retrieval_cap)
        gold_ids = tuple(gold_id for gold_id, _ in turn.gold_answers)
        instances.append(GraphInstance(f"demo-t{index}", build_graph(evidences),
                                       gold_ids, sr))
    return instances
