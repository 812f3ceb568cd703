"""Benchmark evaluation: per-question metrics, history modes, error taxonomy.

A benchmark is a line-delimited file of conversations, each with questions
and gold answers (and optionally a gold SR per turn). Evaluation replays
every conversation through the pipeline in one of two history modes: gold
(the history carries the benchmark answers) or predicted (the history
carries the pipeline's own answers, the realistic setting).

Wrong answers are partitioned into exclusive categories: the gold never
entered the initial graph, the gold was dropped at some pruning iteration,
or the gold survived to the final graph but was not ranked first.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .answers import matching_entity_ids
from .metrics import evidence_set_has_answer, hit_at_k, mrr, precision_at_1
from .pipeline import AnswerResult, PipelineRuntime, append_turn
from .sr import (BaselineSrGenerator, Conversation, StructuredRepresentation,
                 Turn, parse_sr)
from .text import canonical

CATEGORY_NOT_IN_GRAPH = "not-in-initial-graph"
CATEGORY_NOT_IDENTIFIED = "not-identified"
CATEGORY_DROPPED = "dropped-in-pruning"

HISTORY_MODES = ("gold", "predicted")


@dataclass(frozen=True)
class BenchmarkTurn:
    question: str
    gold_answers: tuple[tuple[str, str], ...]
    sr: StructuredRepresentation | None = None
    existential: bool = False

    def gold_strings(self) -> list[str]:
        out = []
        for gold_id, label in self.gold_answers:
            if gold_id:
                out.append(gold_id)
            if label:
                out.append(label)
        return out


@dataclass(frozen=True)
class BenchmarkConversation:
    conv_id: str
    turns: tuple[BenchmarkTurn, ...]


class BenchmarkError(ValueError):
    pass


def load_benchmark(path: str) -> list[BenchmarkConversation]:
    conversations = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                conversations.append(_parse_conversation(record))
            except (BenchmarkError, json.JSONDecodeError, KeyError,
                    TypeError, ValueError) as exc:
                raise BenchmarkError(f"{path}:{lineno}: {exc}") from exc
    return conversations


def _parse_conversation(record: dict) -> BenchmarkConversation:
    turns = []
    for raw in record["turns"]:
        question = str(raw["question"])
        if not question:
            raise BenchmarkError("turn question must be non-empty")
        golds = tuple((str(g.get("id", "")), str(g.get("label", "")))
                      for g in raw.get("gold_answers", []))
        existential = bool(raw.get("existential", False))
        if not golds and not existential:
            raise BenchmarkError("non-existential turn needs >= 1 gold answer")
        sr = parse_sr(raw["sr"]) if "sr" in raw else None
        turns.append(BenchmarkTurn(question, golds, sr, existential))
    if not turns:
        raise BenchmarkError("conversation needs >= 1 turn")
    return BenchmarkConversation(str(record["conv_id"]), tuple(turns))


class _TurnSrGenerator:
    """Serves per-turn benchmark SRs, deferring to a fallback elsewhere."""

    def __init__(self, table: dict[tuple[str, int], StructuredRepresentation],
                 fallback):
        self.table = table
        self.fallback = fallback or BaselineSrGenerator()

    def generate(self, conversation, question, k):
        sr = self.table.get((conversation.conv_id, conversation.next_turn_index))
        if sr is not None:
            return [sr]
        return self.fallback.generate(conversation, question, k)


@dataclass
class MetricsReport:
    num_questions: int
    p_at_1: float
    mrr: float
    hit_at_5: float
    answer_presence: float
    error_categories: dict[str, int]
    records: list[dict]

    def to_dict(self) -> dict:
        return {
            "num_questions": self.num_questions,
            "p_at_1": self.p_at_1,
            "mrr": self.mrr,
            "hit_at_5": self.hit_at_5,
            "answer_presence": self.answer_presence,
            "error_categories": dict(self.error_categories),
            "records": self.records,
        }


def _existential_correct(turn: BenchmarkTurn) -> bool:
    return any(canonical(label) == "yes" for _, label in turn.gold_answers)


def _error_category(result: AnswerResult, golds) -> str:
    if result.existential or not result.graphs:
        return CATEGORY_NOT_IN_GRAPH
    initial = result.graphs[0]
    if not matching_entity_ids(
            (node.entity for node in initial.entity_nodes.values()), golds):
        return CATEGORY_NOT_IN_GRAPH
    for iteration, graph in enumerate(result.graphs[1:], start=1):
        if not matching_entity_ids(
                (node.entity for node in graph.entity_nodes.values()), golds):
            return f"{CATEGORY_DROPPED}-{iteration}"
    return CATEGORY_NOT_IDENTIFIED


def _score_turn(turn: BenchmarkTurn, result: AnswerResult) -> dict:
    golds = turn.gold_strings()
    if turn.existential or result.existential:
        correct = turn.existential and _existential_correct(turn)
        score = 1.0 if correct else 0.0
        record = {"p_at_1": score, "mrr": score, "hit_at_5": score,
                  "presence": None}
    else:
        ranked = [ref for ref, _ in result.ranked_answers]
        final = result.final_graph
        evidences = final.evidences() if final is not None else []
        record = {
            "p_at_1": precision_at_1(ranked, golds),
            "mrr": mrr(ranked, golds),
            "hit_at_5": hit_at_k(ranked, golds, 5),
            "presence": 1.0 if evidence_set_has_answer(evidences, golds) else 0.0,
        }
    if record["p_at_1"] < 1.0:
        record["category"] = _error_category(result, golds)
    return record


def evaluate(benchmark, runtime: PipelineRuntime, history_mode: str = "gold",
             source_filter=None) -> MetricsReport:
    """Run every benchmark conversation and aggregate per-question metrics.

    The source filter restricts retrieval only; models are unchanged.
    """
    if history_mode not in HISTORY_MODES:
        raise ValueError(f"history_mode must be one of {HISTORY_MODES}")
    records: list[dict] = []
    categories: dict[str, int] = {}
    for bench in benchmark:
        sr_table = {(bench.conv_id, i): turn.sr
                    for i, turn in enumerate(bench.turns, start=1)
                    if turn.sr is not None}
        generator = runtime.sr_generator
        if sr_table:
            generator = _TurnSrGenerator(sr_table, generator)
        conversation = Conversation((), bench.conv_id)
        for turn_index, turn in enumerate(bench.turns, start=1):
            result = run_with_generator(runtime, conversation, turn.question,
                                        generator, source_filter)
            record = _score_turn(turn, result)
            record.update({
                "conv_id": bench.conv_id,
                "turn": turn_index,
                "question": turn.question,
                "gold": [list(pair) for pair in turn.gold_answers],
                "answer": result.answer_label,
                "existential": result.existential,
                "graph_sizes": list(result.graph_sizes),
            })
            records.append(record)
            if "category" in record:
                categories[record["category"]] = categories.get(record["category"], 0) + 1
            if history_mode == "gold":
                gold_id, gold_label = (turn.gold_answers[0]
                                       if turn.gold_answers else ("", "Yes"))
                conversation = conversation.with_turn(
                    Turn(turn.question, gold_label, gold_id or None))
            else:
                conversation = append_turn(conversation, turn.question, result)

    def mean(key: str) -> float:
        values = [r[key] for r in records if r.get(key) is not None]
        return float(sum(values) / len(values)) if values else 0.0

    return MetricsReport(len(records), mean("p_at_1"), mean("mrr"),
                         mean("hit_at_5"), mean("presence"),
                         categories, records)


def run_with_generator(runtime: PipelineRuntime, conversation, question,
                       generator, source_filter=None) -> AnswerResult:
    from .pipeline import run_turn
    return run_turn(conversation, question, runtime.store,
                    runtime.pruning_model, runtime.answering_model,
                    runtime.schedule, runtime.explanation_size,
                    generator, retrieval_cap=runtime.retrieval_cap,
                    source_filter=source_filter)


def format_report(report: MetricsReport) -> str:
    """Fixed-width console table for a metrics report."""
    lines = [
        f"{'Metric':<18}{'Value':>8}",
        f"{'P@1':<18}{report.p_at_1:>8.3f}",
        f"{'MRR':<18}{report.mrr:>8.3f}",
        f"{'Hit@5':<18}{report.hit_at_5:>8.3f}",
        f"{'Answer presence':<18}{report.answer_presence:>8.3f}",
        f"{'Questions':<18}{report.num_questions:>8d}",
    ]
    if report.error_categories:
        lines.append("")
        lines.append(f"{'Error category':<26}{'Count':>6}")
        for name in sorted(report.error_categories):
            lines.append(f"{name:<26}{report.error_categories[name]:>6d}")
    return "\n".join(lines)
