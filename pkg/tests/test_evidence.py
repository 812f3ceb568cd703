"""Snapshot ingestion, verbalization, retrieval, and BM25 capping."""

import json
import math
from collections import Counter

import numpy as np
import pytest

from graphqa.evidence import (BM25_B, BM25_K1, EntityRef, Evidence,
                              IngestError, KbFact, Mention, cap_bm25,
                              ingest_snapshot, literal_entity, load_store,
                              retrieve, save_store_dir, verbalize_fact,
                              verbalize_infobox_entry, verbalize_table_record)
from graphqa.sr import StructuredRepresentation
from graphqa.text import normalize_tokens

BOOK = EntityRef("Q1", "Angels and Demons", "written work")
FILM = EntityRef("Q2", "Angels and Demons", "film")
HANKS = EntityRef("Q3", "Tom Hanks", "human")
LANGDON = EntityRef("Q4", "Robert Langdon", "fictional human")


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record) + "\n")
    return str(path)


def snapshot(tmp_path, facts=(), texts=(), tables=(), infoboxes=()):
    return (write_jsonl(tmp_path / "facts.jsonl", facts),
            write_jsonl(tmp_path / "text.jsonl", texts),
            write_jsonl(tmp_path / "tables.jsonl", tables),
            write_jsonl(tmp_path / "infoboxes.jsonl", infoboxes))


def test_verbalize_fact_with_qualifier():
    fact = KbFact(FILM, "cast member", HANKS, (("character", LANGDON),))
    assert verbalize_fact(fact) == (
        "Angels and Demons cast member Tom Hanks, character Robert Langdon")


def test_verbalize_fact_literal_object():
    fact = KbFact(BOOK, "number of pages", literal_entity("768"))
    assert verbalize_fact(fact) == "Angels and Demons number of pages 768"


def test_verbalize_table_record():
    assert verbalize_table_record("Angels and Demons", [("pages", "768")]) == (
        "Angels and Demons, pages is 768")


def test_verbalize_infobox_entry():
    assert verbalize_infobox_entry("Angels and Demons", "running time",
                                   "2 h 18 min") == (
        "Angels and Demons, running time is 2 h 18 min")


def test_literal_entity_date_vs_plain():
    date = literal_entity("14 May 2009")
    assert date.id == "date:2009-05-14" and date.kb_type == "date"
    year = literal_entity("2009")
    assert year.id == "date:2009"
    plain = literal_entity("768")
    assert plain.id == "literal:768" and plain.kb_type == ""


def test_evidence_validates_spans_and_source():
    with pytest.raises(ValueError):
        Evidence("e1", "kb", "short", (Mention(BOOK, 0, 99),))
    with pytest.raises(ValueError):
        Evidence("e1", "parchment", "text")
    with pytest.raises(ValueError):
        Evidence("e1", "kb", "")


def test_ingest_one_record_per_source(tmp_path):
    store = ingest_snapshot(*snapshot(
        tmp_path,
        facts=[{"id": "f1", "subject": {"id": "Q1", "label": "Angels and Demons",
                                        "type": "written work"},
                "predicate": "author",
                "object": {"id": "Q5", "label": "Dan Brown", "type": "human"}}],
        texts=[{"id": "t1", "page_entity_id": "Q5",
                "sentence": "Dan Brown lives in New Hampshire.",
                "anchors": [{"span": [0, 9], "entity_id": "Q5"}]}],
        tables=[{"id": "tb1", "page_entity_id": "Q1",
                 "row_entity_label": "Angels and Demons",
                 "pairs": [{"attribute": "pages", "value": "768"}]}],
        infoboxes=[{"id": "i1", "page_entity_id": "Q1", "attribute": "author",
                    "value": "Dan Brown",
                    "anchors": [{"span": [0, 9], "entity_id": "Q5"}]}]))
    assert len(store) == 4
    assert {ev.source for ev in store.evidences.values()} == {
        "kb", "text", "table", "infobox"}
    assert store.evidences["f1"].text == "Angels and Demons author Dan Brown"
    assert store.evidences["tb1"].text == "Angels and Demons, pages is 768"
    assert store.evidences["i1"].text == "Angels and Demons, author is Dan Brown"


def test_ingest_mention_spans_slice_to_surface(tmp_path):
    store = ingest_snapshot(*snapshot(
        tmp_path,
        facts=[{"id": "f1",
                "subject": {"id": "Q2", "label": "Angels and Demons",
                            "type": "film"},
                "predicate": "cast member",
                "object": {"id": "Q3", "label": "Tom Hanks", "type": "human"},
                "qualifiers": [{"predicate": "character",
                                "object": {"id": "Q4", "label": "Robert Langdon",
                                           "type": "fictional human"}}]}]))
    evidence = store.evidences["f1"]
    surfaces = {m.entity.id: evidence.text[m.start:m.end]
                for m in evidence.mentions}
    assert surfaces == {"Q2": "Angels and Demons", "Q3": "Tom Hanks",
                        "Q4": "Robert Langdon"}


def test_ingest_registry_settles_one_label_per_entity(tmp_path):
    # the fact knows the label; the sentence only anchors the bare id
    store = ingest_snapshot(*snapshot(
        tmp_path,
        facts=[{"id": "f1", "subject": {"id": "Q3", "label": "Tom Hanks",
                                        "type": "human"},
                "predicate": "spouse",
                "object": {"id": "Q6", "label": "Rita Wilson", "type": "human"}}],
        texts=[{"id": "t1", "page_entity_id": "Q3",
                "sentence": "He starred in many films."}]))
    assert store.entities["Q3"].label == "Tom Hanks"
    assert store.entities["Q3"].kb_type == "human"
    # page anchor carries the registry entity
    assert store.evidences["t1"].anchor_entities[0].label == "Tom Hanks"


def test_ingest_rejects_duplicate_ids_and_names_line(tmp_path):
    fact = {"id": "f1", "subject": {"id": "Q1", "label": "A"},
            "predicate": "p", "object": {"id": "Q2", "label": "B"}}
    with pytest.raises(IngestError, match=r"facts\.jsonl:2"):
        ingest_snapshot(*snapshot(tmp_path, facts=[fact, fact]))


def test_ingest_rejects_bad_records_with_location(tmp_path):
    cases = [
        dict(facts=[{"id": "f1", "subject": {"literal": "x"}, "predicate": "p",
                     "object": {"id": "Q2"}}]),
        dict(facts=[{"id": "f1", "subject": {"id": "Q1"}, "predicate": "",
                     "object": {"id": "Q2"}}]),
        dict(texts=[{"id": "t1", "page_entity_id": "Q1", "sentence": "hi",
                     "anchors": [{"span": [0, 99], "entity_id": "Q1"}]}]),
        dict(tables=[{"id": "tb1", "page_entity_id": "Q1",
                      "row_entity_label": "", "pairs": []}]),
        dict(infoboxes=[{"id": "i1", "page_entity_id": "Q1", "attribute": "",
                         "value": "x"}]),
    ]
    for kwargs in cases:
        with pytest.raises(IngestError, match=r"\.jsonl:1"):
            ingest_snapshot(*snapshot(tmp_path, **kwargs))


def test_ingest_invalid_json_names_line(tmp_path):
    paths = snapshot(tmp_path)
    with open(paths[0], "w") as handle:
        handle.write("{}\nnot json\n")
    # parsing happens before validation, so line 2 is reported
    with pytest.raises(IngestError, match=r"facts\.jsonl:2: invalid JSON"):
        ingest_snapshot(*paths)


def _cast_store(tmp_path):
    return ingest_snapshot(*snapshot(
        tmp_path,
        facts=[
            {"id": "f1", "subject": {"id": "Q1", "label": "Angels and Demons",
                                     "type": "written work"},
             "predicate": "author",
             "object": {"id": "Q5", "label": "Dan Brown", "type": "human"}},
            {"id": "f2", "subject": {"id": "Q3", "label": "Tom Hanks",
                                     "type": "human"},
             "predicate": "award received",
             "object": {"id": "Q7", "label": "Academy Award", "type": "award"}},
        ],
        texts=[{"id": "t1", "page_entity_id": "Q3",
                "sentence": "Tom Hanks played Robert Langdon.",
                "anchors": [{"span": [0, 9], "entity_id": "Q3"},
                            {"span": [17, 31], "entity_id": "Q4"}]}]))


def test_retrieve_is_slot_restricted(tmp_path):
    store = _cast_store(tmp_path)
    sr = StructuredRepresentation("Angels and Demons", "Tom Hanks",
                                  "author", "human")
    ids = sorted(ev.id for ev in retrieve(sr, store))
    assert ids == ["f1", "f2", "t1"]
    # entities named only in the relation slot do not pull evidence
    sr2 = StructuredRepresentation("", "Robert Langdon",
                                   "the Dan Brown question", "human")
    assert sorted(ev.id for ev in retrieve(sr2, store)) == ["t1"]


def test_retrieve_requires_full_label_token_run(tmp_path):
    store = _cast_store(tmp_path)
    # "Hanks" alone is not the full label "Tom Hanks"
    sr = StructuredRepresentation("", "Hanks", "role", "")
    assert retrieve(sr, store) == []
    # token run must be contiguous
    sr2 = StructuredRepresentation("", "Tom the Hanks", "role", "")
    assert retrieve(sr2, store) == []


def oracle_bm25_rank(texts, ids, query, k):
    """Brute-force BM25 reference: full scoring of every document."""
    docs = [normalize_tokens(t) for t in texts]
    n = len(docs)
    avgdl = sum(len(d) for d in docs) / n
    df = Counter()
    for doc in docs:
        df.update(set(doc))
    scores = []
    for doc in docs:
        counts = Counter(doc)
        score = 0.0
        for term in normalize_tokens(query):
            tf = counts.get(term, 0)
            if not tf:
                continue
            idf = math.log(1.0 + (n - df[term] + 0.5) / (df[term] + 0.5))
            score += (idf * tf * (BM25_K1 + 1.0)
                      / (tf + BM25_K1 * (1.0 - BM25_B
                                         + BM25_B * len(doc) / avgdl)))
        scores.append(score)
    order = sorted(range(n), key=lambda i: (-scores[i], ids[i]))
    return [ids[i] for i in order[:k]]


def test_cap_bm25_matches_brute_force_oracle():
    rng = np.random.default_rng(42)
    words = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta"]
    for trial in range(60):
        n = int(rng.integers(2, 11))
        texts = [" ".join(rng.choice(words, size=rng.integers(1, 8)))
                 for _ in range(n)]
        ids = [f"ev{i:02d}" for i in range(n)]
        evidences = [Evidence(i, "text", t, anchor_entities=(BOOK,))
                     for i, t in zip(ids, texts)]
        query = " ".join(rng.choice(words, size=rng.integers(1, 4)))
        k = int(rng.integers(1, n + 1))
        got = [ev.id for ev in cap_bm25(evidences, query, k)]
        if len(evidences) <= k:
            assert got == ids  # identity, input order kept
        else:
            assert got == oracle_bm25_rank(texts, ids, query, k)


def test_cap_bm25_tie_breaks_ascending_id():
    evidences = [Evidence("b", "text", "same text", anchor_entities=(BOOK,)),
                 Evidence("a", "text", "same text", anchor_entities=(BOOK,)),
                 Evidence("c", "text", "other words", anchor_entities=(BOOK,))]
    got = [ev.id for ev in cap_bm25(evidences, "same", 2)]
    assert got == ["a", "b"]


def test_cap_bm25_rejects_bad_k():
    with pytest.raises(ValueError):
        cap_bm25([], "q", 0)


def test_store_dir_round_trip(tmp_path):
    paths = snapshot(
        tmp_path,
        facts=[{"id": "f1", "subject": {"id": "Q1", "label": "A"},
                "predicate": "p", "object": {"id": "Q2", "label": "B"}}])
    store_dir = tmp_path / "store"
    saved = save_store_dir(*paths, str(store_dir))
    loaded = load_store(str(store_dir))
    assert sorted(loaded.evidences) == sorted(saved.evidences)
    assert loaded.evidences["f1"].text == saved.evidences["f1"].text
    assert loaded.entities.keys() == saved.entities.keys()
