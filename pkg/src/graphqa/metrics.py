"""Ranking metrics: precision at 1, mean reciprocal rank, hit at k, and
answer presence in evidence sets.

Ranked items may be EntityRef objects (matched against golds with the full
id/label/date rules) or plain strings (matched by equality). Gold answers
are strings throughout.
"""

from __future__ import annotations

from .answers import entity_matches_gold
from .evidence import EntityRef
from .graph import linked_entities


def _matches(item, golds) -> bool:
    if isinstance(item, EntityRef):
        return any(entity_matches_gold(item, gold) for gold in golds)
    return any(item == gold for gold in golds)


def _first_match_rank(ranked, golds):
    for rank, item in enumerate(ranked, start=1):
        if _matches(item, golds):
            return rank
    return None


def precision_at_1(ranked, golds) -> float:
    """1.0 iff the top-ranked item matches a gold; empty ranking scores 0."""
    return 1.0 if _first_match_rank(ranked[:1], golds) == 1 else 0.0


def mrr(ranked, golds) -> float:
    """Reciprocal rank of the first gold match, 0 when absent."""
    rank = _first_match_rank(ranked, golds)
    return 0.0 if rank is None else 1.0 / rank


def hit_at_k(ranked, golds, k: int = 5) -> float:
    """1.0 iff a gold match occurs within the top k."""
    return 1.0 if _first_match_rank(ranked[:k], golds) is not None else 0.0


def evidence_set_has_answer(evidences, golds) -> bool:
    """True when any evidence links an entity matching a gold answer.

    Links include mentions, anchors, and detected temporal entities, the
    same notion of linkage the answer graph uses for edges.
    """
    return any(
        any(entity_matches_gold(entity, gold) for gold in golds)
        for evidence in evidences
        for entity in linked_entities(evidence))


def answer_presence(evidence_sets, golds_per_question) -> float:
    """Fraction of questions whose evidence set contains a gold answer."""
    sets = list(evidence_sets)
    golds = list(golds_per_question)
    if len(sets) != len(golds):
        raise ValueError("one gold list per evidence set required")
    if not sets:
        return 0.0
    hits = sum(1.0 if evidence_set_has_answer(evidences, gold) else 0.0
               for evidences, gold in zip(sets, golds))
    return hits / len(sets)
