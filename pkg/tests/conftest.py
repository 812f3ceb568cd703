"""Shared fixtures: a tiny store and models overfit on the demo snapshot."""

import pytest

from graphqa.demo_data import demo_conversation, demo_instances, demo_store
from graphqa.evidence import cap_bm25, retrieve
from graphqa.gnn import GnnConfig
from graphqa.graph import GraphInstance, build_graph
from graphqa.sr import (Conversation, Turn, generate_sr_candidates,
                        hallucination_filter)
from graphqa.training import OptimizerConfig, train


def predicted_sr_instances(store, retrieval_cap=500):
    """Demo graphs rebuilt from the baseline generator's filtered SRs.

    Training on these too keeps the live pipeline's SRs in-distribution;
    history is gold, as during training one would not have predictions.
    """
    conversation = Conversation(conv_id="demo")
    instances = []
    for index, turn in enumerate(demo_conversation().turns, start=1):
        gold_id, gold_label = turn.gold_answers[0]
        candidates = generate_sr_candidates(conversation, turn.question, 5)
        sr = hallucination_filter(candidates, conversation, turn.question).sr
        evidences = cap_bm25(retrieve(sr, store),
                             sr.text_without_delimiters(), retrieval_cap)
        graph = build_graph(evidences)
        if graph.num_evidences:
            instances.append(GraphInstance(
                f"demo-p{index}", graph,
                tuple(g for g, _ in turn.gold_answers), sr))
        conversation = conversation.with_turn(
            Turn(turn.question, gold_label, gold_id))
    return instances


def train_demo_models(store):
    """Overfit pruning and answering models on the six demo turns."""
    instances = demo_instances(store) + predicted_sr_instances(store)
    config = GnnConfig(dimension=24, layers=2, seed=0)
    answering = train(instances, config,
                      OptimizerConfig(learning_rate=0.05, epochs=60,
                                      stop_at_train_metric=1.0),
                      mode="answering")
    pruning = train(instances, config,
                    OptimizerConfig(learning_rate=0.05, epochs=30,
                                    stop_at_train_metric=1.0),
                    mode="pruning")
    return pruning.params, answering.params


@pytest.fixture(scope="session")
def demo_fixture():
    store = demo_store()
    pruning, answering = train_demo_models(store)
    return store, pruning, answering
