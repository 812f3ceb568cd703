"""HTTP API: session lifecycle, turn payloads, and highlighting spans."""

import json

import pytest
from fastapi.testclient import TestClient

from graphqa.pipeline import PipelineRuntime
from graphqa.service import create_app, turn_view


@pytest.fixture(scope="module")
def runtime(demo_fixture):
    store, pruning, answering = demo_fixture
    return PipelineRuntime(store, pruning, answering)


@pytest.fixture()
def client(runtime):
    return TestClient(create_app(runtime, {"pruning": "p1", "answering": "a1"}))


def test_health_reports_model_versions(client):
    response = client.get("/api/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok",
                               "model_versions": {"pruning": "p1",
                                                  "answering": "a1"}}


def test_cross_origin_requests_allowed(client):
    # the browser client runs on a different origin than the API
    response = client.get("/api/health", headers={"Origin": "http://x.test"})
    assert response.headers["access-control-allow-origin"] == "*"
    preflight = client.options(
        "/api/sessions",
        headers={"Origin": "http://x.test",
                 "Access-Control-Request-Method": "POST"})
    assert preflight.status_code == 200
    assert "POST" in preflight.headers["access-control-allow-methods"]


def test_session_lifecycle(client):
    session_id = client.post("/api/sessions").json()["session_id"]
    empty = client.get(f"/api/sessions/{session_id}").json()
    assert empty["turns"] == []
    assert empty["session_id"] == session_id

    response = client.post(f"/api/sessions/{session_id}/questions",
                           json={"question": "Who wrote the book Angels and Demons?"})
    assert response.status_code == 200
    view = response.json()
    assert view["answer"]["label"] == "Dan Brown"
    assert view["answer"]["id"] == "Q7343"
    assert 0.0 < view["answer"]["score"] <= 1.0
    assert view["turn"] == 1
    assert not view["existential"]
    assert "diagnostic" not in view

    stored = client.get(f"/api/sessions/{session_id}").json()
    assert stored["turns"] == [view]
    assert stored["updated"] >= stored["created"]

    assert client.delete(f"/api/sessions/{session_id}").json() == {
        "deleted": session_id}
    assert client.get(f"/api/sessions/{session_id}").status_code == 404


def test_unknown_session_is_404(client):
    assert client.get("/api/sessions/nope").status_code == 404
    assert client.post("/api/sessions/nope/questions",
                       json={"question": "hi"}).status_code == 404
    assert client.delete("/api/sessions/nope").status_code == 404


def test_blank_question_is_rejected(client):
    session_id = client.post("/api/sessions").json()["session_id"]
    response = client.post(f"/api/sessions/{session_id}/questions",
                           json={"question": ""})
    assert response.status_code == 422


def test_turn_payload_shape(client):
    session_id = client.post("/api/sessions").json()["session_id"]
    view = client.post(f"/api/sessions/{session_id}/questions",
                       json={"question": "Who wrote the book Angels and Demons?"}
                       ).json()
    assert set(view) == {"question", "answer", "ranked_answers", "sr",
                         "evidences", "turn", "existential"}
    # the live pipeline serves the rule-based generator's SR, so the first
    # turn has no conversational context yet
    assert view["sr"] == {"context": "",
                          "question": "Angels and Demons",
                          "relation": "Who wrote the book",
                          "type": ""}
    assert 1 <= len(view["evidences"]) <= 5
    assert len(view["ranked_answers"]) <= 10
    scores = [entry["score"] for entry in view["ranked_answers"]]
    assert scores == sorted(scores, reverse=True)
    for evidence in view["evidences"]:
        assert evidence["source"] in ("kb", "text", "table", "infobox")
        assert isinstance(evidence["score"], float)
        for entity in evidence["entities"]:
            for start, end in entity["spans"]:
                assert 0 <= start < end <= len(evidence["text"])


def test_spans_slice_to_entity_surface(client):
    session_id = client.post("/api/sessions").json()["session_id"]
    view = client.post(f"/api/sessions/{session_id}/questions",
                       json={"question": "Who wrote the book Angels and Demons?"}
                       ).json()
    surfaces = []
    for evidence in view["evidences"]:
        for entity in evidence["entities"]:
            if entity["id"] == view["answer"]["id"]:
                for start, end in entity["spans"]:
                    surfaces.append(evidence["text"][start:end])
    assert "Dan Brown" in surfaces


def test_follow_up_uses_session_history(client):
    session_id = client.post("/api/sessions").json()["session_id"]
    first = client.post(f"/api/sessions/{session_id}/questions",
                        json={"question": "Who wrote the book Angels and Demons?"}
                        ).json()
    assert first["answer"]["label"] == "Dan Brown"
    # the pronoun resolves against the previous predicted answer
    second = client.post(f"/api/sessions/{session_id}/questions",
                         json={"question": "the main character in his books?"}
                         ).json()
    assert second["turn"] == 2
    assert second["answer"]["label"] == "Robert Langdon"
    assert second["sr"]["question"] == "Dan Brown"


def test_existential_turn_payload(client):
    session_id = client.post("/api/sessions").json()["session_id"]
    view = client.post(f"/api/sessions/{session_id}/questions",
                       json={"question": "Did Tom Hanks play Robert Langdon?"}
                       ).json()
    assert view["existential"]
    assert view["answer"] == {"id": None, "label": "Yes", "score": None}
    assert view["sr"] is None
    assert view["evidences"] == []


def test_sessions_are_isolated(client):
    a = client.post("/api/sessions").json()["session_id"]
    b = client.post("/api/sessions").json()["session_id"]
    client.post(f"/api/sessions/{a}/questions",
                json={"question": "Who wrote the book Angels and Demons?"})
    assert client.get(f"/api/sessions/{b}").json()["turns"] == []
    # same question sequence in a fresh session gives the same answers
    view = client.post(f"/api/sessions/{b}/questions",
                       json={"question": "Who wrote the book Angels and Demons?"}
                       ).json()
    first = client.get(f"/api/sessions/{a}").json()["turns"][0]
    assert view["answer"] == first["answer"]
    assert view["evidences"] == first["evidences"]


def test_session_log_records_turns(runtime, tmp_path):
    log_path = tmp_path / "sessions.jsonl"
    client = TestClient(create_app(runtime, session_log=str(log_path)))
    session_id = client.post("/api/sessions").json()["session_id"]
    client.post(f"/api/sessions/{session_id}/questions",
                json={"question": "Who wrote the book Angels and Demons?"})
    lines = log_path.read_text().strip().splitlines()
    assert len(lines) == 1
    record = json.loads(lines[0])
    assert record["session_id"] == session_id
    assert record["answer"]["label"] == "Dan Brown"


def test_default_model_versions(runtime):
    client = TestClient(create_app(runtime))
    versions = client.get("/api/health").json()["model_versions"]
    assert versions == {"pruning": "unversioned", "answering": "unversioned"}


def test_turn_view_without_answers():
    from graphqa.pipeline import AnswerResult
    result = AnswerResult("q", None, None, (), (), (), (), False, "no evidence")
    view = turn_view(result, 3)
    assert view["answer"] is None
    assert view["diagnostic"] == "no evidence"
    assert view["turn"] == 3
