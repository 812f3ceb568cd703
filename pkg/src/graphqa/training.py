"""Training loop for the graph network, plus gradient verification.

Gradient-descent training with AdamW (decoupled weight decay), batch size 1
by default, fixed instance order for reproducibility. After every epoch the
model is evaluated on a dev split and the best epoch is kept: answer
precision at 1 for answering mode, answer presence in the top-5 evidences
for pruning mode. Training aborts on a non-finite loss.

gradient_check compares the backward pass against central finite
differences over every parameter; the training path itself never uses
finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .answers import matching_entity_ids, ranked_ids
from .autodiff import Tensor
from .gnn import (GnnConfig, GnnParameters, Vocabulary, forward,
                  forward_pass, loss_from_pass, make_targets)

TRAIN_MODES = ("answering", "pruning")


@dataclass(frozen=True)
class OptimizerConfig:
    learning_rate: float = 1e-5
    weight_decay: float = 0.01
    batch_size: int = 1
    epochs: int = 5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    # optional early stop once the training-set metric reaches this value
    stop_at_train_metric: float | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


class AdamW:
    """Adam with decoupled weight decay over named parameter tensors."""

    def __init__(self, tensors: dict[str, Tensor], config: OptimizerConfig):
        self.tensors = tensors
        self.config = config
        self.m = {name: np.zeros_like(t.data) for name, t in tensors.items()}
        self.v = {name: np.zeros_like(t.data) for name, t in tensors.items()}
        self.t = 0

    def step(self):
        cfg = self.config
        self.t += 1
        bias1 = 1.0 - cfg.beta1 ** self.t
        bias2 = 1.0 - cfg.beta2 ** self.t
        for name, tensor in self.tensors.items():
            grad = tensor.grad
            m = self.m[name]
            v = self.v[name]
            m *= cfg.beta1
            m += (1.0 - cfg.beta1) * grad
            v *= cfg.beta2
            v += (1.0 - cfg.beta2) * grad * grad
            update = (m / bias1) / (np.sqrt(v / bias2) + cfg.eps)
            tensor.data -= cfg.learning_rate * (update + cfg.weight_decay * tensor.data)


def instance_texts(instances) -> list[str]:
    """Raw texts an instance set contributes to the vocabulary."""
    texts = []
    for inst in instances:
        for node in inst.graph.evidence_nodes.values():
            texts.append(node.evidence.text)
        for node in inst.graph.entity_nodes.values():
            texts.append(node.entity.label)
            texts.append(node.entity.kb_type)
        if inst.sr is not None:
            texts.append(inst.sr.text_without_delimiters())
    return texts


def build_vocabulary(instances, extra_texts=()) -> Vocabulary:
    return Vocabulary.from_texts(instance_texts(instances) + list(extra_texts))


def _usable(instances):
    """Split instances into trainable ones and skip counters."""
    usable = []
    skipped = {"missing_sr": 0, "empty_graph": 0, "gold_not_in_graph": 0}
    for inst in instances:
        if inst.sr is None:
            skipped["missing_sr"] += 1
        elif inst.graph.num_evidences == 0 or inst.graph.num_entities == 0:
            skipped["empty_graph"] += 1
        elif not make_targets(inst.graph, inst.gold_entity_ids)[2]:
            skipped["gold_not_in_graph"] += 1
        else:
            usable.append(inst)
    return usable, skipped


def _instance_hit(scores, graph, gold_entity_ids, mode: str, top_k: int) -> float:
    matched = matching_entity_ids(
        (node.entity for node in graph.entity_nodes.values()), gold_entity_ids)
    if mode == "answering":
        ranking = ranked_ids(scores.entity_scores)
        return 1.0 if ranking and ranking[0] in matched else 0.0
    keep = ranked_ids(scores.evidence_scores)[:top_k]
    return 1.0 if any(
        any(entity_id in matched for entity_id in graph.evidence_nodes[ev_id].entity_ids)
        for ev_id in keep) else 0.0


def evaluate_instances(params: GnnParameters, instances, mode: str = "answering",
                       config: GnnConfig | None = None, top_k: int = 5) -> float:
    """Mean selection metric over instances: P@1 of the entity ranking in
    answering mode, answer presence in the top-k evidences in pruning mode."""
    if mode not in TRAIN_MODES:
        raise ValueError(f"mode must be one of {TRAIN_MODES}")
    if not instances:
        return 0.0
    hits = []
    for inst in instances:
        _, scores = forward(inst.graph, inst.sr, params, config)
        hits.append(_instance_hit(scores, inst.graph, inst.gold_entity_ids,
                                  mode, top_k))
    return float(np.mean(hits))


@dataclass
class EpochStats:
    epoch: int
    mean_loss: float
    dev_metric: float | None = None
    train_metric: float | None = None


@dataclass
class TrainResult:
    params: GnnParameters
    history: list[EpochStats]
    skipped: dict[str, int]
    best_epoch: int
    mode: str


def train(training_instances, config: GnnConfig,
          optimizer_config: OptimizerConfig | None = None,
          dev_instances=None, mode: str = "answering",
          vocab: Vocabulary | None = None, extra_texts=()) -> TrainResult:
    """Train a fresh model on the given graph instances.

    Instances without an SR, with an empty graph, or whose gold answer is
    absent from the graph are skipped and counted. With a dev split the
    best epoch by the mode's metric is returned; without one, the final
    parameters are.
    """
    if mode not in TRAIN_MODES:
        raise ValueError(f"mode must be one of {TRAIN_MODES}")
    opt_config = optimizer_config or OptimizerConfig()
    usable, skipped = _usable(training_instances)
    if not usable:
        raise ValueError(f"no usable training instances (skipped: {skipped})")
    dev_usable = [inst for inst in (dev_instances or [])
                  if inst.sr is not None and inst.graph.num_evidences > 0]

    if vocab is None:
        vocab = build_vocabulary(list(usable) + dev_usable, extra_texts)
    params = GnnParameters.initialize(config, vocab)
    optimizer = AdamW(params.tensors, opt_config)

    history: list[EpochStats] = []
    best_params = None
    best_metric = -1.0
    best_epoch = 0
    for epoch in range(1, opt_config.epochs + 1):
        losses = []
        for start in range(0, len(usable), opt_config.batch_size):
            batch = usable[start:start + opt_config.batch_size]
            params.zero_grads()
            for inst in batch:
                fwd = forward_pass(inst.graph, inst.sr, params, config)
                total, breakdown = loss_from_pass(fwd, inst.gold_entity_ids, config)
                if not math.isfinite(breakdown.total):
                    raise RuntimeError(
                        f"training diverged: non-finite loss at epoch {epoch}, "
                        f"instance {inst.graph_id!r} (loss={breakdown.total})")
                total.backward()
                losses.append(breakdown.total)
            if len(batch) > 1:
                for tensor in params.tensors.values():
                    tensor.grad /= len(batch)
            optimizer.step()

        stats = EpochStats(epoch, float(np.mean(losses)))
        if dev_usable:
            stats.dev_metric = evaluate_instances(params, dev_usable, mode, config)
            if stats.dev_metric > best_metric:
                best_metric = stats.dev_metric
                best_params = params.copy()
                best_epoch = epoch
        if opt_config.stop_at_train_metric is not None:
            stats.train_metric = evaluate_instances(params, usable, mode, config)
        history.append(stats)
        if (opt_config.stop_at_train_metric is not None
                and stats.train_metric >= opt_config.stop_at_train_metric):
            break

    if best_params is None:
        best_params = params
        best_epoch = history[-1].epoch
    return TrainResult(best_params, history, skipped, best_epoch, mode)


def gradient_check(params: GnnParameters, instance, config: GnnConfig | None = None,
                   step: float = 1e-5) -> float:
    """Max relative error between backward() and central finite differences.

    Perturbs every parameter element in place (restoring it), so this is
    O(parameter count) forward passes; keep instances small.
    """
    config = config or params.config
    golds = instance.gold_entity_ids
    fwd = forward_pass(instance.graph, instance.sr, params, config)
    total, _ = loss_from_pass(fwd, golds, config)
    params.zero_grads()
    total.backward()
    analytic = {name: tensor.grad.copy() for name, tensor in params.tensors.items()}

    def loss_value() -> float:
        run = forward_pass(instance.graph, instance.sr, params, config)
        tensor, _ = loss_from_pass(run, golds, config)
        return float(tensor.data)

    max_error = 0.0
    for name, tensor in params.tensors.items():
        flat = tensor.data.reshape(-1)
        grad_flat = analytic[name].reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + step
            hi = loss_value()
            flat[i] = original - step
            lo = loss_value()
            flat[i] = original
            fd = (hi - lo) / (2.0 * step)
            error = abs(grad_flat[i] - fd) / max(1.0, abs(fd))
            max_error = max(max_error, error)
    return max_error
