"""Structured representations of conversational questions.

A follow-up question like "who played him in the films?" is incomplete on
its own. A structured representation (SR) makes the intent explicit through
four slots: context entity, question entity, relation, and expected answer
type, serialized as a single pipe-delimited string. This module owns SR
parsing/serialization, candidate generation, the hallucination filter that
rejects candidates using words absent from the conversation, and the
existential (yes/no) question heuristic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .text import normalize_tokens

SR_DELIMITER = "|"

AUXILIARY_VERBS = frozenset({
    "is", "are", "was", "were", "do", "does", "did", "has", "have", "had",
    "can", "could", "will", "would", "should", "am",
})

HISTORY_PRONOUNS = frozenset({
    "he", "she", "him", "her", "it", "they", "his", "its", "their",
})

# lowercase words allowed inside a capitalized span ("Angels and Demons")
_SPAN_CONNECTORS = frozenset({
    "and", "of", "the", "in", "on", "at", "for", "de", "la", "von", "der", "&",
})

# a lone sentence-initial question word is not an entity span
_QUESTION_WORDS = frozenset({
    "who", "what", "when", "where", "which", "whom", "whose", "why", "how",
}) | AUXILIARY_VERBS


class SrParseError(ValueError):
    """Raised for SR strings with the wrong delimiter count."""


class SrGenerationError(RuntimeError):
    """Raised when an SR candidate generator fails; carries diagnostics."""


@dataclass(frozen=True)
class StructuredRepresentation:
    context_entity: str
    question_entity: str
    relation: str
    answer_type: str

    def __post_init__(self):
        if not (self.context_entity or self.question_entity or self.relation):
            raise ValueError(
                "SR needs at least one of context entity, question entity, relation")

    def checked_tokens(self) -> list[str]:
        """Tokens subject to the hallucination check (answer type excluded)."""
        return (normalize_tokens(self.context_entity)
                + normalize_tokens(self.question_entity)
                + normalize_tokens(self.relation))

    def text_without_delimiters(self) -> str:
        """Slots joined by spaces; the retrieval/encoding-friendly form."""
        return " ".join(s for s in (self.context_entity, self.question_entity,
                                    self.relation, self.answer_type) if s)


def parse_sr(text: str) -> StructuredRepresentation:
    count = text.count(SR_DELIMITER)
    if count != 3:
        raise SrParseError(f"expected 3 '{SR_DELIMITER}' delimiters, found {count}")
    context, question, relation, answer_type = (part.strip()
                                                for part in text.split(SR_DELIMITER))
    return StructuredRepresentation(context, question, relation, answer_type)


def serialize_sr(sr: StructuredRepresentation) -> str:
    return SR_DELIMITER.join(
        (sr.context_entity, sr.question_entity, sr.relation, sr.answer_type))


@dataclass(frozen=True)
class Turn:
    question: str
    answer_label: str = ""
    answer_entity_id: str | None = None

    def __post_init__(self):
        if not self.question:
            raise ValueError("turn question must be non-empty")


@dataclass(frozen=True)
class Conversation:
    turns: tuple[Turn, ...] = ()
    conv_id: str = ""

    def vocabulary(self) -> set[str]:
        """Normalized tokens over all questions and answers so far."""
        vocab: set[str] = set()
        for turn in self.turns:
            vocab.update(normalize_tokens(turn.question))
            vocab.update(normalize_tokens(turn.answer_label))
        return vocab

    def with_turn(self, turn: Turn) -> "Conversation":
        return Conversation(self.turns + (turn,), self.conv_id)

    @property
    def next_turn_index(self) -> int:
        """1-based index the next question will occupy."""
        return len(self.turns) + 1


@dataclass(frozen=True)
class SrSelection:
    """Filter outcome: the chosen SR, its candidate rank, and whether the
    rank-1 fallback fired because every candidate was hallucinated."""
    sr: StructuredRepresentation
    rank: int
    used_fallback: bool


def hallucination_filter(candidates: list[StructuredRepresentation],
                         conversation: Conversation,
                         current_question: str) -> SrSelection:
    """Pick the highest-ranked candidate whose context/question/relation
    tokens all occur in the conversation so far plus the current question.

    The answer-type slot is exempt: a good type ("human") is usually not in
    the input vocabulary by design. If every candidate hallucinates, the
    rank-1 candidate is returned with ``used_fallback`` set.
    """
    if not candidates:
        raise ValueError("candidate list is empty")
    allowed = conversation.vocabulary() | set(normalize_tokens(current_question))
    for rank, sr in enumerate(candidates, start=1):
        if all(tok in allowed for tok in sr.checked_tokens()):
            return SrSelection(sr, rank, used_fallback=False)
    return SrSelection(candidates[0], 1, used_fallback=True)


def is_existential_question(question: str) -> bool:
    """True when the question opens with an auxiliary verb ("did ... ?")."""
    tokens = normalize_tokens(question)
    return bool(tokens) and tokens[0] in AUXILIARY_VERBS


def _is_capitalized(token: str) -> bool:
    for ch in token:
        if ch.isalpha():
            return ch.isupper()
    return False


def _strip_edges(token: str) -> str:
    start, end = 0, len(token)
    while start < end and not token[start].isalnum():
        start += 1
    while end > start and not token[end - 1].isalnum():
        end -= 1
    return token[start:end]


def capitalized_spans(question: str) -> list[str]:
    """Maximal capitalized spans, lowercase connectors allowed inside.

    "Who wrote the book Angels and Demons?" -> ["Angels and Demons"]
    (a lone leading question word does not count as a span).
    """
    raw = question.split()
    spans: list[list[str]] = []
    i = 0
    while i < len(raw):
        if not _is_capitalized(raw[i]):
            i += 1
            continue
        j = i
        while j + 1 < len(raw):
            if _is_capitalized(raw[j + 1]):
                j += 1
            elif (_strip_edges(raw[j + 1]).lower() in _SPAN_CONNECTORS
                  and j + 2 < len(raw) and _is_capitalized(raw[j + 2])):
                j += 2
            else:
                break
        spans.append(raw[i:j + 1])
        i = j + 1
    out = []
    for span in spans:
        # sentence-initial question words and auxiliaries are capitalized
        # by position, not because they name an entity
        if span is spans[0] and raw and span[0] == raw[0]:
            lead = _strip_edges(span[0]).lower()
            if lead in _QUESTION_WORDS or lead in AUXILIARY_VERBS:
                span = span[1:]
                if not span:
                    continue
        words = [_strip_edges(tok) for tok in span]
        text = " ".join(w for w in words if w)
        if text:
            out.append(text)
    return out


def _remove_span(question: str, span: str) -> str:
    """Question text with the entity span removed (token-wise)."""
    span_tokens = normalize_tokens(span)
    if not span_tokens:
        return question.strip()
    raw = question.split()
    norm = [normalize_tokens(tok) for tok in raw]
    flat = [(t[0] if t else None) for t in norm]
    n = len(span_tokens)
    for start in range(len(flat) - n + 1):
        if flat[start:start + n] == span_tokens:
            raw = raw[:start] + raw[start + n:]
            break
    text = " ".join(raw).strip()
    return _strip_edges(text) if text else text


class BaselineSrGenerator:
    """Deterministic rule-based SR candidates; a stand-in for a learned
    sequence generator so the pipeline is testable end to end.

    Rules: the question entity is the longest capitalized span, or the
    previous answer when the question leans on a pronoun; the context
    entity is the opening turn's question entity; the relation is the
    question with the entity span removed; the answer type is left empty.
    """

    def generate(self, conversation: Conversation, question: str,
                 k: int) -> list[StructuredRepresentation]:
        spans = capitalized_spans(question)
        longest = max(spans, key=lambda s: (len(s.split()), -spans.index(s))) if spans else ""
        q_tokens = set(normalize_tokens(question))

        question_entity = longest
        entity_from_history = False
        if q_tokens & HISTORY_PRONOUNS:
            for turn in reversed(conversation.turns):
                if turn.answer_label:
                    question_entity = turn.answer_label
                    entity_from_history = True
                    break

        context_entity = ""
        if conversation.turns:
            first_spans = capitalized_spans(conversation.turns[0].question)
            if first_spans:
                context_entity = max(first_spans, key=lambda s: len(s.split()))

        relation = question if entity_from_history else _remove_span(question, question_entity)
        relation = _strip_edges(relation.strip()) or _strip_edges(question.strip())

        primary = StructuredRepresentation(
            context_entity, question_entity, relation, "")
        candidates = [primary]
        # alternative readings, kept distinct and ordered
        if entity_from_history and longest and longest != question_entity:
            candidates.append(StructuredRepresentation(
                context_entity, longest, _remove_span(question, longest), ""))
        if context_entity:
            candidates.append(StructuredRepresentation(
                "", question_entity, relation, ""))
        unique: list[StructuredRepresentation] = []
        for cand in candidates:
            if cand not in unique:
                unique.append(cand)
        return unique[:k]


class GoldSrGenerator:
    """Serves file-supplied gold SRs keyed by (conv_id, turn); falls back to
    the rule-based baseline for uncovered turns.

    File format: one JSON object per line, {"conv_id", "turn", "sr"} with
    ``sr`` in pipe-delimited form.
    """

    def __init__(self, path):
        self.table: dict[tuple[str, int], StructuredRepresentation] = {}
        self.fallback = BaselineSrGenerator()
        with open(path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                    key = (str(record["conv_id"]), int(record["turn"]))
                    self.table[key] = parse_sr(record["sr"])
                except (KeyError, ValueError, TypeError) as exc:
                    raise SrGenerationError(
                        f"bad gold-SR record at line {lineno}: {exc}") from exc

    def generate(self, conversation: Conversation, question: str,
                 k: int) -> list[StructuredRepresentation]:
        gold = self.table.get((conversation.conv_id, conversation.next_turn_index))
        if gold is not None:
            return [gold]
        return self.fallback.generate(conversation, question, k)


def generate_sr_candidates(conversation: Conversation, question: str, k: int,
                           generator=None) -> list[StructuredRepresentation]:
    """Ranked SR candidates for the current question, at most ``k``."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    generator = generator or BaselineSrGenerator()
    try:
        candidates = generator.generate(conversation, question, k)
    except SrGenerationError:
        raise
    except Exception as exc:
        raise SrGenerationError(f"SR generator failed: {exc!r}") from exc
    return list(candidates)[:k]
