"""Full question-answering turns: SR selection, retrieval, graph
construction, iterative pruning, answering, and explanation extraction.

A turn flows through three stages. First the question and conversation are
reduced to a structured representation (with hallucination filtering).
Second, evidences for the SR's entity slots are retrieved and BM25-capped.
Third, the answer graph is built and shrunk through the pruning model once
per schedule entry, then the answering model scores the final graph; the
top entity is the answer and the top evidences are the explanation.

Existential (yes/no) questions short-circuit to the answer "Yes" before
any retrieval, mirroring the upstream heuristic for out-of-scope yes/no
questions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .evidence import Evidence, EntityRef, EvidenceStore, cap_bm25, retrieve
from .gnn import GnnConfig, GnnParameters, NodeScores, forward
from .graph import AnswerGraph, build_graph, shrink_graph
from .answers import ranked_ids
from .sr import (Conversation, SrSelection, StructuredRepresentation, Turn,
                 generate_sr_candidates, hallucination_filter,
                 is_existential_question)

RETRIEVAL_CAP = 500
DEFAULT_SCHEDULE = (100, 20)
DEFAULT_EXPLANATIONS = 5
EXISTENTIAL_ANSWER = "Yes"


def validate_schedule(schedule) -> tuple[int, ...]:
    """Evidence budgets for the pruning iterations.

    Must be strictly decreasing positive integers; the empty schedule means
    one-shot answering with no pruning pass.
    """
    out = tuple(int(k) for k in schedule)
    for k in out:
        if k < 1:
            raise ValueError(f"schedule entries must be positive, got {k}")
    for a, b in zip(out, out[1:]):
        if b >= a:
            raise ValueError(f"schedule must be strictly decreasing, got {out}")
    return out


def parse_schedule(text: str) -> tuple[int, ...]:
    """Parse a comma-separated schedule like "100,20"; blank means empty."""
    text = text.strip()
    if not text:
        return ()
    return validate_schedule(int(part) for part in text.split(","))


@dataclass(frozen=True)
class AnswerResult:
    """Outcome of one turn, including enough trace for error analysis."""
    question: str
    sr: StructuredRepresentation | None
    sr_selection: SrSelection | None
    ranked_answers: tuple[tuple[EntityRef, float], ...]
    explanations: tuple[tuple[Evidence, float], ...]
    graph_sizes: tuple[int, ...]
    graphs: tuple[AnswerGraph, ...]
    existential: bool = False
    diagnostic: str = ""

    @property
    def answer(self) -> EntityRef | None:
        return self.ranked_answers[0][0] if self.ranked_answers else None

    @property
    def answer_score(self) -> float:
        return self.ranked_answers[0][1] if self.ranked_answers else 0.0

    @property
    def answer_label(self) -> str:
        if self.existential:
            return EXISTENTIAL_ANSWER
        return self.answer.label if self.answer else ""

    @property
    def final_graph(self) -> AnswerGraph | None:
        return self.graphs[-1] if self.graphs else None


def _empty_result(question: str, sr, selection, existential: bool,
                  diagnostic: str) -> AnswerResult:
    return AnswerResult(question, sr, selection, (), (), (), (),
                        existential, diagnostic)


def run_turn(conversation: Conversation, question: str, store: EvidenceStore,
             pruning_model: GnnParameters, answering_model: GnnParameters,
             schedule=DEFAULT_SCHEDULE,
             explanation_size: int = DEFAULT_EXPLANATIONS,
             sr_generator=None, sr_candidates: int = 5,
             retrieval_cap: int = RETRIEVAL_CAP,
             source_filter=None) -> AnswerResult:
    """Answer one question against the store with the two trained models.

    source_filter, when given, keeps only evidences whose source tag is in
    it, applied at retrieval time; the models are untouched.
    """
    schedule = validate_schedule(schedule)
    if is_existential_question(question):
        return _empty_result(question, None, None, True, "")

    candidates = generate_sr_candidates(conversation, question, sr_candidates,
                                        sr_generator)
    selection = hallucination_filter(candidates, conversation, question)
    sr = selection.sr

    evidences = retrieve(sr, store)
    if source_filter is not None:
        allowed = set(source_filter)
        evidences = [ev for ev in evidences if ev.source in allowed]
    evidences = cap_bm25(evidences, sr.text_without_delimiters(), retrieval_cap)

    graph = build_graph(evidences)
    if graph.num_evidences == 0:
        return _empty_result(question, sr, selection, False, "no evidence")

    graphs = [graph]
    sizes = []
    for budget in schedule:
        _, scores = forward(graph, sr, pruning_model)
        graph = shrink_graph(graph, scores.evidence_scores, budget)
        graphs.append(graph)
        sizes.append(graph.num_evidences)

    _, scores = forward(graph, sr, answering_model)
    ranked = tuple(
        (graph.entity_nodes[entity_id].entity, scores.entity_scores[entity_id])
        for entity_id in ranked_ids(scores.entity_scores))
    explanations = tuple(
        (graph.evidence_nodes[ev_id].evidence, scores.evidence_scores[ev_id])
        for ev_id in ranked_ids(scores.evidence_scores)[:explanation_size])
    return AnswerResult(question, sr, selection, ranked, explanations,
                        tuple(sizes), tuple(graphs))


def append_turn(conversation: Conversation, question: str,
                result: AnswerResult) -> Conversation:
    """Extend the history with the predicted answer (realistic mode)."""
    answer = result.answer
    return conversation.with_turn(Turn(
        question, result.answer_label, answer.id if answer else None))


@dataclass(frozen=True)
class PipelineRuntime:
    """A store plus trained models and turn settings, ready to answer."""
    store: EvidenceStore
    pruning_model: GnnParameters
    answering_model: GnnParameters
    schedule: tuple[int, ...] = DEFAULT_SCHEDULE
    explanation_size: int = DEFAULT_EXPLANATIONS
    sr_generator: object = None
    retrieval_cap: int = RETRIEVAL_CAP

    def run(self, conversation: Conversation, question: str,
            source_filter=None) -> AnswerResult:
        return run_turn(conversation, question, self.store,
                        self.pruning_model, self.answering_model,
                        self.schedule, self.explanation_size,
                        self.sr_generator, retrieval_cap=self.retrieval_cap,
                        source_filter=source_filter)
