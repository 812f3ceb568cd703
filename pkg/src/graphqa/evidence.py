"""Heterogeneous knowledge snapshot: ingestion, verbalization, retrieval.

A snapshot is four line-delimited JSON files (KB facts, text sentences,
table records, infobox entries). Ingestion verbalizes every record into one
Evidence whose text carries character-span mentions of KB entities, plus an
anchor to the page entity the record came from. Retrieval is
slot-restricted: only entities named in the context-entity or
question-entity slots of a structured representation pull in their
evidences, and oversized candidate sets are capped with BM25.

Anchor spans in the input files are half-open character offsets into the
record's source field (the sentence for text records, the pair value for
table records, the value for infobox entries); ingestion shifts them into
the verbalized evidence text.
"""

from __future__ import annotations

import json
import math
import os
import shutil
from collections import Counter
from dataclasses import dataclass

from .dates import as_temporal_value
from .text import canonical, normalize_tokens

SOURCE_TAGS = ("kb", "text", "table", "infobox")

BM25_K1 = 1.2
BM25_B = 0.75


class IngestError(ValueError):
    """Raised for malformed snapshot records; message names file and line."""


@dataclass(frozen=True)
class EntityRef:
    id: str
    label: str
    kb_type: str = ""

    def __post_init__(self):
        if not self.id:
            raise ValueError("entity id must be non-empty")


def literal_entity(value: str) -> EntityRef:
    """Pseudo-entity for a literal fact object (number, date, plain string).

    Dates get ``date:<iso>`` ids and the "date" type so that a literal in a
    fact and the same date spotted in running text merge to one graph node.
    Other literals key on their normalized text with an empty type.
    """
    iso = as_temporal_value(value)
    if iso is not None:
        return EntityRef("date:" + iso, value, "date")
    return EntityRef("literal:" + (canonical(value) or value), value, "")


@dataclass(frozen=True)
class Mention:
    entity: EntityRef
    start: int
    end: int


@dataclass(frozen=True)
class KbFact:
    subject: EntityRef
    predicate: str
    object: EntityRef
    qualifiers: tuple[tuple[str, EntityRef], ...] = ()

    def __post_init__(self):
        if not self.predicate:
            raise ValueError("fact predicate must be non-empty")


@dataclass(frozen=True)
class Evidence:
    id: str
    source: str
    text: str
    mentions: tuple[Mention, ...] = ()
    anchor_entities: tuple[EntityRef, ...] = ()

    def __post_init__(self):
        if not self.text:
            raise ValueError("evidence text must be non-empty")
        if self.source not in SOURCE_TAGS:
            raise ValueError(f"unknown source tag {self.source!r}")
        for mention in self.mentions:
            if not (0 <= mention.start < mention.end <= len(self.text)):
                raise ValueError(
                    f"mention span [{mention.start},{mention.end}) outside text bounds")

    def entities(self) -> list[EntityRef]:
        """Mentioned and anchored entities, first-occurrence order."""
        seen: dict[str, EntityRef] = {}
        for mention in self.mentions:
            seen.setdefault(mention.entity.id, mention.entity)
        for ref in self.anchor_entities:
            seen.setdefault(ref.id, ref)
        return list(seen.values())

    def entity_ids(self) -> list[str]:
        return [ref.id for ref in self.entities()]


def verbalize_fact(fact: KbFact) -> str:
    text, _ = _fact_layout(fact)
    return text


def _fact_layout(fact: KbFact) -> tuple[str, list[Mention]]:
    """Verbalized fact text plus the mention span of every entity in it."""
    mentions = [Mention(fact.subject, 0, len(fact.subject.label))]
    text = fact.subject.label + " " + fact.predicate
    start = len(text) + 1
    text += " " + fact.object.label
    mentions.append(Mention(fact.object, start, start + len(fact.object.label)))
    for predicate, obj in fact.qualifiers:
        text += ", " + predicate + " "
        start = len(text)
        text += obj.label
        mentions.append(Mention(obj, start, start + len(obj.label)))
    return text, mentions


def verbalize_table_record(entity_label: str, pairs) -> str:
    text = entity_label
    for attribute, value in pairs:
        text += ", " + attribute + " is " + value
    return text


def verbalize_infobox_entry(entity_label: str, attribute: str, value: str) -> str:
    return entity_label + ", " + attribute + " is " + value


class EvidenceStore:
    """Evidences indexed by id, with an entity-to-evidence index and corpus
    term statistics. Immutable once ingest_snapshot returns it."""

    def __init__(self):
        self.evidences: dict[str, Evidence] = {}
        self.entities: dict[str, EntityRef] = {}
        self.entity_index: dict[str, list[str]] = {}
        self.doc_freq: Counter = Counter()
        self.term_counts: dict[str, Counter] = {}
        self.avg_evidence_len: float = 0.0

    def __len__(self) -> int:
        return len(self.evidences)

    def _add(self, evidence: Evidence, path: str, lineno: int):
        if evidence.id in self.evidences:
            raise IngestError(f"{path}:{lineno}: duplicate evidence id {evidence.id!r}")
        self.evidences[evidence.id] = evidence
        for eid in evidence.entity_ids():
            self.entity_index.setdefault(eid, []).append(evidence.id)

    def _finalize(self):
        total = 0
        for evidence in self.evidences.values():
            counts = Counter(normalize_tokens(evidence.text))
            self.term_counts[evidence.id] = counts
            self.doc_freq.update(counts.keys())
            total += sum(counts.values())
        if self.evidences:
            self.avg_evidence_len = total / len(self.evidences)

    def evidences_for_entity(self, entity_id: str) -> list[Evidence]:
        return [self.evidences[eid] for eid in self.entity_index.get(entity_id, [])]


def _read_records(path: str) -> list[tuple[int, dict]]:
    records = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise IngestError(f"{path}:{lineno}: record must be a JSON object")
            records.append((lineno, obj))
    return records


def _need(record: dict, key: str, where: str):
    value = record.get(key)
    if value is None or value == "" or value == []:
        raise IngestError(f"{where}: missing or empty field {key!r}")
    return value


def _parse_entity_or_literal(obj, where: str):
    """Returns ("entity", (id, label, type)) or ("literal", value)."""
    if not isinstance(obj, dict):
        raise IngestError(f"{where}: entity object must be a JSON object")
    if "literal" in obj:
        value = str(obj["literal"])
        if not value:
            raise IngestError(f"{where}: empty literal")
        return "literal", value
    eid = obj.get("id")
    if not eid:
        raise IngestError(f"{where}: entity object needs a non-empty 'id' or a 'literal'")
    return "entity", (str(eid), str(obj.get("label", "")), str(obj.get("type", "")))


def _parse_anchors(raw, field_text: str, where: str) -> list[tuple[int, int, str]]:
    if raw is None:
        return []
    if not isinstance(raw, list):
        raise IngestError(f"{where}: anchors must be a list")
    out = []
    for anchor in raw:
        if not isinstance(anchor, dict) or "span" not in anchor or "entity_id" not in anchor:
            raise IngestError(f"{where}: anchor needs 'span' and 'entity_id'")
        span = anchor["span"]
        if (not isinstance(span, list) or len(span) != 2
                or not all(isinstance(v, int) for v in span)):
            raise IngestError(f"{where}: anchor span must be [start, end)")
        start, end = span
        if not (0 <= start < end <= len(field_text)):
            raise IngestError(
                f"{where}: anchor span [{start},{end}) outside field of length {len(field_text)}")
        entity_id = str(anchor["entity_id"])
        if not entity_id:
            raise IngestError(f"{where}: empty anchor entity_id")
        out.append((start, end, entity_id))
    return out


class _Registry:
    """Entity id to (label, kb_type), first non-empty value wins.

    The ingestion pre-pass fills this from every file before any evidence
    is built, so all evidences agree on one label per entity regardless of
    which record introduced it.
    """

    def __init__(self):
        self.slots: dict[str, list[str]] = {}

    def note(self, entity_id: str, label: str = "", kb_type: str = ""):
        slot = self.slots.setdefault(entity_id, ["", ""])
        if label and not slot[0]:
            slot[0] = label
        if kb_type and not slot[1]:
            slot[1] = kb_type

    def freeze(self) -> dict[str, EntityRef]:
        return {eid: EntityRef(eid, slot[0] or eid, slot[1])
                for eid, slot in self.slots.items()}


def ingest_snapshot(fact_path: str, text_path: str, table_path: str,
                    infobox_path: str) -> EvidenceStore:
    """Build an EvidenceStore from the four snapshot files.

    Two passes: the first parses and validates every record and settles the
    entity registry (labels from facts, then table row labels, then anchor
    surface text, then the id itself); the second verbalizes records into
    evidences in file order. Any malformed record raises IngestError naming
    the file and line.
    """
    facts, texts, tables, infoboxes = [], [], [], []
    registry = _Registry()

    for lineno, record in _read_records(fact_path):
        where = f"{fact_path}:{lineno}"
        ev_id = str(_need(record, "id", where))
        kind, subject = _parse_entity_or_literal(_need(record, "subject", where), where)
        if kind != "entity":
            raise IngestError(f"{where}: fact subject must be an entity")
        predicate = str(_need(record, "predicate", where))
        obj = _parse_entity_or_literal(_need(record, "object", where), where)
        qualifiers = []
        for qualifier in record.get("qualifiers") or []:
            if not isinstance(qualifier, dict):
                raise IngestError(f"{where}: qualifier must be a JSON object")
            q_pred = str(_need(qualifier, "predicate", where))
            qualifiers.append(
                (q_pred, _parse_entity_or_literal(_need(qualifier, "object", where), where)))
        registry.note(*subject)
        for kind, parsed in [obj] + [q[1] for q in qualifiers]:
            if kind == "entity":
                registry.note(*parsed)
            else:
                ref = literal_entity(parsed)
                registry.note(ref.id, ref.label, ref.kb_type)
        facts.append((lineno, ev_id, subject[0], predicate, obj, qualifiers))

    for lineno, record in _read_records(text_path):
        where = f"{text_path}:{lineno}"
        ev_id = str(_need(record, "id", where))
        page_id = str(_need(record, "page_entity_id", where))
        sentence = str(_need(record, "sentence", where))
        anchors = _parse_anchors(record.get("anchors"), sentence, where)
        registry.note(page_id)
        for start, end, entity_id in anchors:
            registry.note(entity_id, sentence[start:end])
        texts.append((lineno, ev_id, page_id, sentence, anchors))

    for lineno, record in _read_records(table_path):
        where = f"{table_path}:{lineno}"
        ev_id = str(_need(record, "id", where))
        page_id = str(_need(record, "page_entity_id", where))
        row_label = str(_need(record, "row_entity_label", where))
        raw_pairs = _need(record, "pairs", where)
        if not isinstance(raw_pairs, list):
            raise IngestError(f"{where}: pairs must be a list")
        pairs = []
        for pair in raw_pairs:
            if not isinstance(pair, dict):
                raise IngestError(f"{where}: pair must be a JSON object")
            attribute = str(_need(pair, "attribute", where))
            value = str(pair.get("value", ""))
            pairs.append((attribute, value, _parse_anchors(pair.get("anchors"), value, where)))
        registry.note(page_id, row_label)
        for _, value, anchors in pairs:
            for start, end, entity_id in anchors:
                registry.note(entity_id, value[start:end])
        tables.append((lineno, ev_id, page_id, row_label, pairs))

    for lineno, record in _read_records(infobox_path):
        where = f"{infobox_path}:{lineno}"
        ev_id = str(_need(record, "id", where))
        page_id = str(_need(record, "page_entity_id", where))
        attribute = str(_need(record, "attribute", where))
        value = str(record.get("value", ""))
        anchors = _parse_anchors(record.get("anchors"), value, where)
        registry.note(page_id)
        for start, end, entity_id in anchors:
            registry.note(entity_id, value[start:end])
        infoboxes.append((lineno, ev_id, page_id, attribute, value, anchors))

    entities = registry.freeze()
    store = EvidenceStore()
    store.entities = entities

    def resolve(parsed) -> EntityRef:
        kind, payload = parsed
        if kind == "literal":
            return entities[literal_entity(payload).id]
        return entities[payload[0]]

    for lineno, ev_id, subject_id, predicate, obj, qualifiers in facts:
        fact = KbFact(entities[subject_id], predicate, resolve(obj),
                      tuple((p, resolve(o)) for p, o in qualifiers))
        text, mentions = _fact_layout(fact)
        store._add(Evidence(ev_id, "kb", text, tuple(mentions)), fact_path, lineno)

    for lineno, ev_id, page_id, sentence, anchors in texts:
        mentions = tuple(Mention(entities[entity_id], start, end)
                         for start, end, entity_id in anchors)
        store._add(Evidence(ev_id, "text", sentence, mentions, (entities[page_id],)),
                   text_path, lineno)

    for lineno, ev_id, page_id, row_label, pairs in tables:
        text = row_label
        mentions = [Mention(entities[page_id], 0, len(row_label))]
        for attribute, value, anchors in pairs:
            offset = len(text) + len(", " + attribute + " is ")
            text += ", " + attribute + " is " + value
            mentions.extend(Mention(entities[entity_id], offset + start, offset + end)
                            for start, end, entity_id in anchors)
        store._add(Evidence(ev_id, "table", text, tuple(mentions), (entities[page_id],)),
                   table_path, lineno)

    for lineno, ev_id, page_id, attribute, value, anchors in infoboxes:
        label = entities[page_id].label
        text = verbalize_infobox_entry(label, attribute, value)
        offset = len(label) + len(", " + attribute + " is ")
        mentions = [Mention(entities[page_id], 0, len(label))]
        mentions.extend(Mention(entities[entity_id], offset + start, offset + end)
                        for start, end, entity_id in anchors)
        store._add(Evidence(ev_id, "infobox", text, tuple(mentions), (entities[page_id],)),
                   infobox_path, lineno)

    store._finalize()
    return store


def _token_run(haystack: list[str], needle: list[str]) -> bool:
    """True when needle occurs as a contiguous token run inside haystack."""
    if not needle or len(needle) > len(haystack):
        return False
    return any(haystack[i:i + len(needle)] == needle
               for i in range(len(haystack) - len(needle) + 1))


def retrieve(sr, store: EvidenceStore) -> list[Evidence]:
    """Evidences for entities named in the SR's entity slots.

    An entity matches when its normalized label occurs as a token run inside
    the context-entity or question-entity slot text. The relation and
    answer-type slots are ignored on purpose: names appearing there tend to
    be noisy disambiguations. Results keep store order, deduplicated by id.
    """
    slots = [normalize_tokens(sr.context_entity), normalize_tokens(sr.question_entity)]
    wanted: set[str] = set()
    for entity in store.entities.values():
        label = normalize_tokens(entity.label)
        if label and any(_token_run(slot, label) for slot in slots):
            wanted.update(store.entity_index.get(entity.id, ()))
    return [ev for ev in store.evidences.values() if ev.id in wanted]


class Bm25:
    """Okapi BM25 over a fixed document list.

    idf uses the smoothed form ln(1 + (N - df + 0.5) / (df + 0.5)), which
    stays positive for terms present in most documents.
    """

    def __init__(self, docs: list[list[str]], k1: float = BM25_K1, b: float = BM25_B):
        self.k1 = k1
        self.b = b
        self.counts = [Counter(doc) for doc in docs]
        self.lengths = [len(doc) for doc in docs]
        self.avgdl = sum(self.lengths) / len(docs) if docs else 0.0
        df = Counter()
        for counts in self.counts:
            df.update(counts.keys())
        n = len(docs)
        self.idf = {term: math.log(1.0 + (n - freq + 0.5) / (freq + 0.5))
                    for term, freq in df.items()}

    def score(self, query_tokens: list[str], index: int) -> float:
        if self.avgdl == 0.0:
            return 0.0
        counts = self.counts[index]
        norm = self.k1 * (1.0 - self.b + self.b * self.lengths[index] / self.avgdl)
        total = 0.0
        for term in query_tokens:
            tf = counts.get(term, 0)
            if tf:
                total += self.idf[term] * tf * (self.k1 + 1.0) / (tf + norm)
        return total


def cap_bm25(evidences, query: str, k: int) -> list[Evidence]:
    """Top-k evidences by BM25 against the query; identity when not over k.

    Statistics come from the candidate set itself, not the whole store.
    Ties break by ascending evidence id.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    evidences = list(evidences)
    if len(evidences) <= k:
        return evidences
    query_tokens = normalize_tokens(query)
    ranker = Bm25([normalize_tokens(ev.text) for ev in evidences])
    order = sorted(range(len(evidences)),
                   key=lambda i: (-ranker.score(query_tokens, i), evidences[i].id))
    return [evidences[i] for i in order[:k]]


STORE_FILE_NAMES = ("facts.jsonl", "text.jsonl", "tables.jsonl", "infoboxes.jsonl")


def save_store_dir(fact_path: str, text_path: str, table_path: str,
                   infobox_path: str, store_dir: str) -> EvidenceStore:
    """Validate a snapshot and copy its files into a store directory.

    Ingestion is deterministic, so the directory just holds the four source
    files under fixed names; load_store re-ingests them.
    """
    store = ingest_snapshot(fact_path, text_path, table_path, infobox_path)
    os.makedirs(store_dir, exist_ok=True)
    for src, name in zip((fact_path, text_path, table_path, infobox_path),
                         STORE_FILE_NAMES):
        dst = os.path.join(store_dir, name)
        if os.path.abspath(src) != os.path.abspath(dst):
            shutil.copyfile(src, dst)
    return store


def load_store(store_dir: str) -> EvidenceStore:
    return ingest_snapshot(*(os.path.join(store_dir, name) for name in STORE_FILE_NAMES))
