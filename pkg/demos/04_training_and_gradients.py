"""Training the graph scorer and checking its gradients.

The scorer is two rounds of SR-guided message passing over the bipartite
graph, ending in a softmax over entity nodes and one over evidence nodes.
Everything is plain numpy with a small reverse-mode tape, so the gradients
the trainer uses can be checked against finite differences directly.
"""

import numpy as np

from graphqa import (GnnConfig, OptimizerConfig, evaluate_instances, forward,
                     gradient_check, train)
from graphqa.gnn import GnnParameters
from graphqa.synthetic import random_graph_instance
from graphqa.training import build_vocabulary

instances = [random_graph_instance(seed, num_evidences=8) for seed in range(12)]
inst = instances[0]
print(f"instance graphs: {inst.graph.num_entities} entities, "
      f"{inst.graph.num_evidences} evidences, gold {inst.gold_entity_ids}")

# an untrained model already produces two proper distributions
config = GnnConfig(dimension=16, layers=2, seed=0)
vocab = build_vocabulary(instances)
params = GnnParameters.initialize(config, vocab)
_, scores = forward(inst.graph, inst.sr, params, config)
print(f"\nuntrained entity scores sum to {sum(scores.entity_scores.values()):.6f}")
top = max(scores.entity_scores, key=scores.entity_scores.get)
print(f"untrained argmax: {top} (gold is {inst.gold_entity_ids[0]})")

# finite differences vs the tape, element by element; relative error down
# near float round-off means the backward pass is trustworthy
tiny_config = GnnConfig(dimension=4, layers=1, seed=0)
tiny_params = GnnParameters.initialize(tiny_config, vocab)
err = gradient_check(tiny_params, inst, tiny_config)
print(f"\ngradient check, max relative error: {err:.2e}")

# train to convergence on the 12 instances; early stopping fires once the
# training metric hits 1.0, long before the epoch budget
result = train(instances, config,
               OptimizerConfig(learning_rate=0.03, epochs=200,
                               stop_at_train_metric=1.0))
print(f"\ntrained for {len(result.history)} epochs "
      f"(budget was 200, skipped: {result.skipped})")
for stats in result.history[:3] + result.history[-1:]:
    print(f"  epoch {stats.epoch}: loss {stats.mean_loss:.4f} "
          f"train P@1 {stats.train_metric}")

p_at_1 = evaluate_instances(result.params, instances, mode="answering")
print(f"\nfinal precision@1 on the training set: {p_at_1:.3f}")

# the trained model now puts nearly all entity mass on the gold node
_, scores = forward(inst.graph, inst.sr, result.params, config)
ranked = sorted(scores.entity_scores.items(), key=lambda kv: -kv[1])
print("trained entity distribution:")
for entity_id, score in ranked[:4]:
    marker = " <- gold" if entity_id in inst.gold_entity_ids else ""
    print(f"  {score:.4f} {entity_id}{marker}")
