"""Gold-answer matching and deterministic score ranking.

Gold answers arrive as plain strings that may be a KB id, a surface label,
or a date written in any supported format. Loss targets, evaluation
metrics, and the answer extraction step all share the matching rules here
so they can never disagree.
"""

from __future__ import annotations

from .dates import as_temporal_value
from .evidence import EntityRef
from .text import canonical


def entity_matches_gold(entity: EntityRef, gold: str) -> bool:
    """True when the gold string names this entity.

    Match order: exact KB id, then normalized label equality, then ISO date
    equality for date pseudo-entities.
    """
    if gold == entity.id:
        return True
    gold_canonical = canonical(gold)
    if gold_canonical and gold_canonical == canonical(entity.label):
        return True
    iso = as_temporal_value(gold)
    return iso is not None and entity.id == "date:" + iso


def matching_entity_ids(entities, golds) -> set[str]:
    """Ids of the given EntityRefs matched by any gold string."""
    return {entity.id for entity in entities
            if any(entity_matches_gold(entity, gold) for gold in golds)}


def ranked_ids(scores: dict[str, float]) -> list[str]:
    """Node ids by descending score, ties broken by ascending id."""
    return sorted(scores, key=lambda node_id: (-scores[node_id], node_id))
