"""Shared token normalization.

The same normalizer is used everywhere tokens are compared or counted:
hallucination filtering, conversation vocabulary, retrieval label matching,
BM25 scoring, and the embedding layer. Keeping it a single function is
load-bearing; several modules assert on it.
"""

import re

# strips non-alphanumeric characters (unicode-aware) from token edges;
# underscores count as punctuation here
_EDGE_PUNCT = re.compile(r"^[\W_]+|[\W_]+$", re.UNICODE)


def normalize_tokens(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip punctuation off token edges.

    Digits are kept; tokens that are pure punctuation disappear. Interior
    punctuation (hyphens, apostrophes) is preserved.
    """
    out = []
    for raw in text.lower().split():
        tok = _EDGE_PUNCT.sub("", raw)
        if tok:
            out.append(tok)
    return out


def canonical(text: str) -> str:
    """Normalized single-string form, for label equality checks."""
    return " ".join(normalize_tokens(text))
