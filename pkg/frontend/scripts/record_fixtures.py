"""Record real API exchanges for the frontend test fixtures.

Trains the two demo models, mounts the HTTP app in-process, holds a short
conversation, and writes every request/response pair verbatim to
tests/fixtures/recorded.json. Rerun after any change to the API surface:

    python3 frontend/scripts/record_fixtures.py
"""

import json
import os

from fastapi.testclient import TestClient

from graphqa import (Conversation, GnnConfig, OptimizerConfig,
                     PipelineRuntime, Turn, build_graph, cap_bm25,
                     generate_sr_candidates, hallucination_filter, retrieve,
                     train)
from graphqa.demo_data import demo_conversation, demo_instances, demo_store
from graphqa.graph import GraphInstance
from graphqa.service import create_app

OUT = os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures",
                   "recorded.json")

QUESTIONS = [
    "Who wrote the book Angels and Demons?",
    "the main character in his books?",
    "Did Tom Hanks play Robert Langdon?",
]


def trained_runtime() -> PipelineRuntime:
    store = demo_store()
    instances = demo_instances(store)
    history = Conversation(conv_id="demo")
    for index, turn in enumerate(demo_conversation().turns, start=1):
        gold_id, gold_label = turn.gold_answers[0]
        candidates = generate_sr_candidates(history, turn.question, 5)
        sr = hallucination_filter(candidates, history, turn.question).sr
        evidences = cap_bm25(retrieve(sr, store),
                             sr.text_without_delimiters(), 500)
        graph = build_graph(evidences)
        if graph.num_evidences:
            instances.append(GraphInstance(f"demo-p{index}", graph,
                                           (gold_id,), sr))
        history = history.with_turn(Turn(turn.question, gold_label, gold_id))
    config = GnnConfig(dimension=24, layers=2, seed=0)
    answering = train(instances, config,
                      OptimizerConfig(learning_rate=0.05, epochs=60,
                                      stop_at_train_metric=1.0))
    pruning = train(instances, config,
                    OptimizerConfig(learning_rate=0.05, epochs=30,
                                    stop_at_train_metric=1.0), mode="pruning")
    return PipelineRuntime(store, pruning.params, answering.params)


def main():
    app = create_app(trained_runtime(),
                     {"pruning": "demo-1", "answering": "demo-1"})
    client = TestClient(app)
    exchanges = []

    def record(name, method, path, body=None):
        response = client.request(method, path, json=body)
        exchanges.append({
            "name": name, "method": method, "path": path,
            "request_body": body, "status": response.status_code,
            "body": response.json(),
        })
        return response.json()

    record("health", "GET", "/api/health")
    created = record("create_session", "POST", "/api/sessions")
    sid = created["session_id"]
    record("session_empty", "GET", f"/api/sessions/{sid}")
    record("turn1", "POST", f"/api/sessions/{sid}/questions",
           {"question": QUESTIONS[0]})
    record("session_after_1", "GET", f"/api/sessions/{sid}")
    record("turn2", "POST", f"/api/sessions/{sid}/questions",
           {"question": QUESTIONS[1]})
    record("session_after_2", "GET", f"/api/sessions/{sid}")
    record("turn3_existential", "POST", f"/api/sessions/{sid}/questions",
           {"question": QUESTIONS[2]})
    record("session_after_3", "GET", f"/api/sessions/{sid}")
    record("get_unknown_404", "GET", "/api/sessions/gone")
    record("post_unknown_404", "POST", "/api/sessions/gone/questions",
           {"question": "hello?"})

    os.makedirs(os.path.dirname(OUT), exist_ok=True)
    with open(OUT, "w", encoding="utf-8") as handle:
        json.dump({"session_id": sid, "exchanges": exchanges}, handle,
                  indent=2)
        handle.write("\n")
    print(f"wrote {len(exchanges)} exchanges to {os.path.normpath(OUT)}")


if __name__ == "__main__":
    main()
