"""Question-aware graph neural network over answer graphs.

Node encodings start from trainable mean-pooled token embeddings: an
evidence encodes its text concatenated with the SR behind a separator
token, an entity encodes its label, KB type, and the SR (cross mode), or is
initialized as an attention-weighted sum of its neighboring evidence
encodings (alternating mode). Each message-passing layer updates evidences
from their entity neighborhoods and entities from their evidence
neighborhoods, both reading the previous layer's encodings, with attention
weights from a per-layer linear projection dotted against the SR vector.
Updates are residual and ReLU-activated. After the last layer two linear
heads score entities as answer candidates and evidences for relevance,
each normalized with a softmax over its node family.

The multi-task loss is a weighted sum of mean binary cross-entropies on
the two score families; weights are configured to sum to 1.

Ablation switches: disable_sr_attention makes every attention uniform over
the neighborhood, disable_cross_encoder drops SR tokens from node
encodings, disable_entity_type drops KB-type tokens from entity encodings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .answers import matching_entity_ids
from .autodiff import Tensor, segment_softmax, softmax
from .graph import AnswerGraph
from .sr import StructuredRepresentation
from .text import normalize_tokens

UNK_TOKEN = "<unk>"
SEP_TOKEN = "<sep>"
TYPE_TOKEN = "<type>"
RESERVED_TOKENS = (UNK_TOKEN, SEP_TOKEN, TYPE_TOKEN)

SCORE_CLAMP = 1e-12

ENCODER_MODES = ("cross", "alternating")


class Vocabulary:
    """Token to row-index map with reserved unknown/separator rows.

    Token order is sorted, so the same token set always yields the same
    table layout regardless of build order.
    """

    def __init__(self, tokens):
        extra = sorted(set(tokens) - set(RESERVED_TOKENS))
        self.tokens = list(RESERVED_TOKENS) + extra
        self.index = {token: i for i, token in enumerate(self.tokens)}

    @classmethod
    def from_texts(cls, texts) -> "Vocabulary":
        tokens: set[str] = set()
        for text in texts:
            tokens.update(normalize_tokens(text))
        return cls(tokens)

    @classmethod
    def restore(cls, tokens: list[str]) -> "Vocabulary":
        """Rebuild from a saved token list, trusting its row order."""
        if list(tokens[:len(RESERVED_TOKENS)]) != list(RESERVED_TOKENS):
            raise ValueError("token list does not start with the reserved rows")
        vocab = cls.__new__(cls)
        vocab.tokens = list(tokens)
        vocab.index = {token: i for i, token in enumerate(vocab.tokens)}
        return vocab

    def encode(self, tokens) -> np.ndarray:
        return np.array([self.index.get(token, 0) for token in tokens],
                        dtype=np.int64)

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class GnnConfig:
    dimension: int = 32
    layers: int = 3
    encoder_mode: str = "cross"
    w_entity: float = 0.5
    w_evidence: float = 0.5
    disable_sr_attention: bool = False
    disable_cross_encoder: bool = False
    disable_entity_type: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.dimension < 2:
            raise ValueError(f"dimension must be >= 2, got {self.dimension}")
        if self.layers < 1:
            raise ValueError(f"layers must be >= 1, got {self.layers}")
        if self.encoder_mode not in ENCODER_MODES:
            raise ValueError(f"encoder_mode must be one of {ENCODER_MODES}")
        if self.w_entity < 0 or self.w_evidence < 0:
            raise ValueError("loss weights must be non-negative")
        if abs(self.w_entity + self.w_evidence - 1.0) > 1e-9:
            raise ValueError("loss weights must sum to 1")


class GnnParameters:
    """All trainable tensors, keyed by name in a fixed creation order."""

    def __init__(self, config: GnnConfig, vocab: Vocabulary,
                 tensors: dict[str, Tensor]):
        self.config = config
        self.vocab = vocab
        self.tensors = tensors

    @classmethod
    def initialize(cls, config: GnnConfig, vocab: Vocabulary) -> "GnnParameters":
        rng = np.random.default_rng(config.seed)
        d = config.dimension
        scale = 1.0 / math.sqrt(d)
        tensors: dict[str, Tensor] = {
            "embedding": Tensor(rng.uniform(-scale, scale, (len(vocab), d)))}

        def linear(name: str):
            tensors[name + ".weight"] = Tensor(rng.uniform(-scale, scale, (d, d)))
            tensors[name + ".bias"] = Tensor(np.zeros(d))

        for layer in range(1, config.layers + 1):
            linear(f"layer{layer}.alpha_evidence")
            linear(f"layer{layer}.message_evidence")
            linear(f"layer{layer}.alpha_entity")
            linear(f"layer{layer}.message_entity")
        linear("alpha_init")
        linear("score_entity")
        linear("score_evidence")
        return cls(config, vocab, tensors)

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def zero_grads(self):
        for tensor in self.tensors.values():
            tensor.zero_grad()

    def copy(self) -> "GnnParameters":
        return GnnParameters(self.config, self.vocab,
                             {name: Tensor(tensor.data.copy())
                              for name, tensor in self.tensors.items()})


def _apply_linear(params: GnnParameters, name: str, x: Tensor) -> Tensor:
    return x @ params[name + ".weight"] + params[name + ".bias"]


def sr_tokens(sr: StructuredRepresentation) -> list[str]:
    """SR tokens for encoding: the four slots in order, no delimiters."""
    return normalize_tokens(sr.text_without_delimiters())


def evidence_tokens(evidence, sr: StructuredRepresentation,
                    config: GnnConfig) -> list[str]:
    tokens = normalize_tokens(evidence.text)
    if not config.disable_cross_encoder:
        tokens = tokens + [SEP_TOKEN] + sr_tokens(sr)
    return tokens


def entity_tokens(entity, sr: StructuredRepresentation,
                  config: GnnConfig) -> list[str]:
    tokens = normalize_tokens(entity.label)
    if not config.disable_entity_type:
        tokens = tokens + [TYPE_TOKEN] + normalize_tokens(entity.kb_type)
    if not config.disable_cross_encoder:
        tokens = tokens + [SEP_TOKEN] + sr_tokens(sr)
    return tokens


def _encode_tokens(tokens, params: GnnParameters) -> Tensor:
    ids = params.vocab.encode(tokens)
    if ids.size == 0:
        raise ValueError("cannot encode an empty token list")
    return params["embedding"].take(ids).mean(axis=0)


def _encode_token_batch(token_lists, params: GnnParameters) -> Tensor:
    """Mean-pooled encodings for many token lists at once, one row each."""
    lengths = [len(tokens) for tokens in token_lists]
    for i, n in enumerate(lengths):
        if n == 0:
            raise ValueError(f"cannot encode an empty token list (item {i})")
    flat = np.concatenate([params.vocab.encode(tokens) for tokens in token_lists])
    segments = np.repeat(np.arange(len(token_lists)), lengths)
    sums = params["embedding"].take(flat).segment_sum(segments, len(token_lists))
    recip = (1.0 / np.array(lengths, dtype=np.float64)).reshape(-1, 1)
    return sums * Tensor(recip)


def encode_text(tokens, params: GnnParameters) -> np.ndarray:
    """Mean of embedding rows for a token sequence (UNK for unknowns)."""
    return _encode_tokens(tokens, params).data


def encode_evidence(evidence, sr, params: GnnParameters,
                    config: GnnConfig) -> np.ndarray:
    return _encode_tokens(evidence_tokens(evidence, sr, config), params).data


def encode_entity_cross(entity, sr, params: GnnParameters,
                        config: GnnConfig) -> np.ndarray:
    return _encode_tokens(entity_tokens(entity, sr, config), params).data


@dataclass
class _EdgeLayout:
    """Flattened bipartite adjacency over the canonical node orders."""
    entity_order: tuple[str, ...]
    evidence_order: tuple[str, ...]
    edge_entities: np.ndarray
    edge_evidences: np.ndarray
    entity_degrees: np.ndarray
    evidence_degrees: np.ndarray


def _edge_layout(graph: AnswerGraph) -> _EdgeLayout:
    entity_order = tuple(graph.entity_ids())
    evidence_order = tuple(graph.evidence_ids())
    entity_index = {entity_id: i for i, entity_id in enumerate(entity_order)}
    edge_entities: list[int] = []
    edge_evidences: list[int] = []
    for j, ev_id in enumerate(evidence_order):
        for entity_id in graph.evidence_nodes[ev_id].entity_ids:
            edge_entities.append(entity_index[entity_id])
            edge_evidences.append(j)
    edge_entities = np.array(edge_entities, dtype=np.int64)
    edge_evidences = np.array(edge_evidences, dtype=np.int64)
    entity_degrees = np.bincount(edge_entities, minlength=len(entity_order))
    evidence_degrees = np.bincount(edge_evidences, minlength=len(evidence_order))
    assert entity_degrees.min(initial=1) >= 1 and evidence_degrees.min(initial=1) >= 1, \
        "answer graphs never contain isolated nodes"
    return _EdgeLayout(entity_order, evidence_order, edge_entities,
                       edge_evidences, entity_degrees.astype(np.float64),
                       evidence_degrees.astype(np.float64))


def _edge_attention(source_prev: Tensor, sr_vector: Tensor,
                    params: GnnParameters, name: str, gather_idx: np.ndarray,
                    segment_idx: np.ndarray, num_segments: int,
                    degrees: np.ndarray, uniform: bool) -> Tensor:
    """Per-edge attention, normalized inside each segment's neighborhood."""
    if uniform:
        return Tensor(1.0 / degrees[segment_idx])
    logits = (_apply_linear(params, name, source_prev) @ sr_vector).take(gather_idx)
    return segment_softmax(logits, segment_idx, num_segments)


def _layer(entity_prev: Tensor, evidence_prev: Tensor, sr_vector: Tensor,
           params: GnnParameters, layout: _EdgeLayout, layer: int,
           uniform: bool):
    """One message-passing layer; both halves read layer l-1 encodings."""
    n_entities = len(layout.entity_order)
    n_evidences = len(layout.evidence_order)

    alpha_ev = _edge_attention(
        entity_prev, sr_vector, params, f"layer{layer}.alpha_evidence",
        layout.edge_entities, layout.edge_evidences, n_evidences,
        layout.evidence_degrees, uniform)
    gathered = entity_prev.take(layout.edge_entities) * alpha_ev.reshape(-1, 1)
    message_ev = _apply_linear(params, f"layer{layer}.message_evidence",
                               gathered.segment_sum(layout.edge_evidences, n_evidences))
    evidence_next = (message_ev + evidence_prev).relu()

    alpha_ent = _edge_attention(
        evidence_prev, sr_vector, params, f"layer{layer}.alpha_entity",
        layout.edge_evidences, layout.edge_entities, n_entities,
        layout.entity_degrees, uniform)
    gathered = evidence_prev.take(layout.edge_evidences) * alpha_ent.reshape(-1, 1)
    message_ent = _apply_linear(params, f"layer{layer}.message_entity",
                                gathered.segment_sum(layout.edge_entities, n_entities))
    entity_next = (message_ent + entity_prev).relu()
    return entity_next, evidence_next, alpha_ev, alpha_ent


def _alternating_init(evidence_0: Tensor, sr_vector: Tensor,
                      params: GnnParameters, layout: _EdgeLayout,
                      uniform: bool):
    """Entity layer-0 encodings as attention-weighted evidence sums."""
    n_entities = len(layout.entity_order)
    alpha = _edge_attention(
        evidence_0, sr_vector, params, "alpha_init",
        layout.edge_evidences, layout.edge_entities, n_entities,
        layout.entity_degrees, uniform)
    gathered = evidence_0.take(layout.edge_evidences) * alpha.reshape(-1, 1)
    return gathered.segment_sum(layout.edge_entities, n_entities), alpha


def _score_head(encodings: Tensor, sr_vector: Tensor, params: GnnParameters,
                name: str) -> Tensor:
    return softmax(_apply_linear(params, name, encodings) @ sr_vector)


@dataclass
class ForwardPass:
    """Full differentiable state of one forward run (training path)."""
    graph: AnswerGraph
    config: GnnConfig
    layout: _EdgeLayout
    sr_vector: Tensor
    entity_layers: list[Tensor]
    evidence_layers: list[Tensor]
    entity_scores: Tensor
    evidence_scores: Tensor
    attention_evidence: list[np.ndarray]
    attention_entity: list[np.ndarray]
    attention_init: np.ndarray | None


@dataclass(frozen=True)
class GraphEncodings:
    entity_order: tuple[str, ...]
    evidence_order: tuple[str, ...]
    entity_layers: tuple[np.ndarray, ...]
    evidence_layers: tuple[np.ndarray, ...]
    sr_vector: np.ndarray
    edge_entities: np.ndarray
    edge_evidences: np.ndarray
    attention_evidence: tuple[np.ndarray, ...]
    attention_entity: tuple[np.ndarray, ...]
    attention_init: np.ndarray | None


@dataclass(frozen=True)
class NodeScores:
    entity_scores: dict[str, float]
    evidence_scores: dict[str, float]


@dataclass(frozen=True)
class LossBreakdown:
    total: float
    entity_loss: float
    evidence_loss: float


def forward_pass(graph: AnswerGraph, sr: StructuredRepresentation,
                 params: GnnParameters,
                 config: GnnConfig | None = None) -> ForwardPass:
    """Encode, run all layers, and score; keeps tensors for backward."""
    config = config or params.config
    if graph.num_evidences == 0 or graph.num_entities == 0:
        raise ValueError("cannot run the network on an empty graph")
    layout = _edge_layout(graph)
    sr_vector = _encode_tokens(sr_tokens(sr), params)

    evidence_0 = _encode_token_batch(
        [evidence_tokens(graph.evidence_nodes[ev_id].evidence, sr, config)
         for ev_id in layout.evidence_order], params)
    attention_init = None
    if config.encoder_mode == "alternating":
        entity_0, alpha0 = _alternating_init(
            evidence_0, sr_vector, params, layout, config.disable_sr_attention)
        attention_init = alpha0.data.copy()
    else:
        entity_0 = _encode_token_batch(
            [entity_tokens(graph.entity_nodes[entity_id].entity, sr, config)
             for entity_id in layout.entity_order], params)

    entity_layers = [entity_0]
    evidence_layers = [evidence_0]
    attention_evidence: list[np.ndarray] = []
    attention_entity: list[np.ndarray] = []
    for layer in range(1, config.layers + 1):
        entity_next, evidence_next, alpha_ev, alpha_ent = _layer(
            entity_layers[-1], evidence_layers[-1], sr_vector, params,
            layout, layer, config.disable_sr_attention)
        entity_layers.append(entity_next)
        evidence_layers.append(evidence_next)
        attention_evidence.append(alpha_ev.data.copy())
        attention_entity.append(alpha_ent.data.copy())

    entity_scores = _score_head(entity_layers[-1], sr_vector, params, "score_entity")
    evidence_scores = _score_head(evidence_layers[-1], sr_vector, params, "score_evidence")
    return ForwardPass(graph, config, layout, sr_vector, entity_layers,
                       evidence_layers, entity_scores, evidence_scores,
                       attention_evidence, attention_entity, attention_init)


def forward(graph: AnswerGraph, sr: StructuredRepresentation,
            params: GnnParameters,
            config: GnnConfig | None = None) -> tuple[GraphEncodings, NodeScores]:
    fwd = forward_pass(graph, sr, params, config)
    encodings = GraphEncodings(
        fwd.layout.entity_order, fwd.layout.evidence_order,
        tuple(t.data.copy() for t in fwd.entity_layers),
        tuple(t.data.copy() for t in fwd.evidence_layers),
        fwd.sr_vector.data.copy(),
        fwd.layout.edge_entities.copy(), fwd.layout.edge_evidences.copy(),
        tuple(fwd.attention_evidence), tuple(fwd.attention_entity),
        fwd.attention_init)
    scores = NodeScores(
        dict(zip(fwd.layout.entity_order, fwd.entity_scores.data.tolist())),
        dict(zip(fwd.layout.evidence_order, fwd.evidence_scores.data.tolist())))
    return encodings, scores


def encode_entities_alternating(graph: AnswerGraph,
                                evidence_encodings: np.ndarray,
                                sr_vector: np.ndarray,
                                params: GnnParameters,
                                uniform: bool = False) -> np.ndarray:
    """Entity encodings from neighboring evidence rows (rows follow the
    canonical sorted orders of the graph)."""
    layout = _edge_layout(graph)
    entity_0, _ = _alternating_init(Tensor(evidence_encodings),
                                    Tensor(sr_vector), params, layout, uniform)
    return entity_0.data


def message_passing_layer(graph: AnswerGraph, entity_encodings: np.ndarray,
                          evidence_encodings: np.ndarray,
                          sr_vector: np.ndarray, params: GnnParameters,
                          layer: int,
                          config: GnnConfig | None = None):
    """One layer on plain arrays; returns (entity, evidence) next encodings."""
    config = config or params.config
    if not 1 <= layer <= config.layers:
        raise ValueError(f"layer must be in 1..{config.layers}, got {layer}")
    layout = _edge_layout(graph)
    entity_next, evidence_next, _, _ = _layer(
        Tensor(entity_encodings), Tensor(evidence_encodings), Tensor(sr_vector),
        params, layout, layer, config.disable_sr_attention)
    return entity_next.data, evidence_next.data


def score_entities(entity_encodings: np.ndarray, sr_vector: np.ndarray,
                   params: GnnParameters) -> np.ndarray:
    if entity_encodings.shape[0] == 0:
        raise ValueError("cannot score an empty entity set")
    return _score_head(Tensor(entity_encodings), Tensor(sr_vector),
                       params, "score_entity").data


def score_evidences(evidence_encodings: np.ndarray, sr_vector: np.ndarray,
                    params: GnnParameters) -> np.ndarray:
    if evidence_encodings.shape[0] == 0:
        raise ValueError("cannot score an empty evidence set")
    return _score_head(Tensor(evidence_encodings), Tensor(sr_vector),
                       params, "score_evidence").data


def make_targets(graph: AnswerGraph, gold_entity_ids):
    """Per-node 0/1 targets aligned to the canonical sorted node orders.

    An entity is positive when it matches any gold string; an evidence is
    positive when it touches a positive entity.
    """
    entity_order = graph.entity_ids()
    matched = matching_entity_ids(
        (graph.entity_nodes[entity_id].entity for entity_id in entity_order),
        gold_entity_ids)
    entity_targets = np.array([1.0 if entity_id in matched else 0.0
                               for entity_id in entity_order])
    evidence_targets = np.array(
        [1.0 if any(entity_id in matched for entity_id in node.entity_ids) else 0.0
         for _, node in sorted(graph.evidence_nodes.items())])
    return entity_targets, evidence_targets, matched


def _bce_mean_np(scores: np.ndarray, targets: np.ndarray) -> float:
    s = np.clip(scores, SCORE_CLAMP, 1.0 - SCORE_CLAMP)
    return float(-np.mean(targets * np.log(s) + (1.0 - targets) * np.log(1.0 - s)))


def loss(scores: NodeScores, gold_entity_ids, graph: AnswerGraph,
         config: GnnConfig) -> LossBreakdown:
    """Weighted binary cross-entropy over both score families."""
    entity_targets, evidence_targets, _ = make_targets(graph, gold_entity_ids)
    entity_arr = np.array([scores.entity_scores[i] for i in graph.entity_ids()])
    evidence_arr = np.array([scores.evidence_scores[i] for i in graph.evidence_ids()])
    entity_loss = _bce_mean_np(entity_arr, entity_targets)
    evidence_loss = _bce_mean_np(evidence_arr, evidence_targets)
    total = config.w_entity * entity_loss + config.w_evidence * evidence_loss
    return LossBreakdown(total, entity_loss, evidence_loss)


def _bce_mean_tensor(scores: Tensor, targets: np.ndarray) -> Tensor:
    s = scores.clip(SCORE_CLAMP, 1.0 - SCORE_CLAMP)
    per_node = s.log() * Tensor(targets) + (1.0 - s).log() * Tensor(1.0 - targets)
    return -per_node.mean()


def loss_from_pass(fwd: ForwardPass, gold_entity_ids,
                   config: GnnConfig | None = None) -> tuple[Tensor, LossBreakdown]:
    """Differentiable twin of loss(); returns the loss tensor and floats."""
    config = config or fwd.config
    entity_targets, evidence_targets, _ = make_targets(fwd.graph, gold_entity_ids)
    entity_loss = _bce_mean_tensor(fwd.entity_scores, entity_targets)
    evidence_loss = _bce_mean_tensor(fwd.evidence_scores, evidence_targets)
    total = entity_loss * config.w_entity + evidence_loss * config.w_evidence
    breakdown = LossBreakdown(float(total.data), float(entity_loss.data),
                              float(evidence_loss.data))
    return total, breakdown
