import dataclasses
import json
import time
from concurrent.futures import ThreadPoolExecutor

import pytest
from fastapi.testclient import TestClient

from conftest import SCRIPTED_LINES
from sophie.service import create_app


@pytest.fixture
def service_cfg(tmp_path, cfg):
    return dataclasses.replace(cfg, data_dir=tmp_path / "data")


@pytest.fixture
def client(service_cfg):
    with TestClient(create_app(service_cfg)) as c:
        yield c


def _run_scripted(client, lines=SCRIPTED_LINES):
    created = client.post("/api/sessions", json={"schema_id": "lung-cancer-prognosis"})
    assert created.status_code == 201
    session_id = created.json()["session_id"]
    body = created.json()
    for line in lines:
        response = client.post(f"/api/sessions/{session_id}/turns", json={"text": line})
        assert response.status_code == 200
        body = response.json()
    return session_id, body


def test_healthz(client):
    assert client.get("/healthz").json() == {"status": "ok"}


def test_schemas_listing(client):
    schemas = client.get("/api/schemas").json()["schemas"]
    ids = [s["id"] for s in schemas]
    assert ids == sorted(ids)
    assert "lung-cancer-prognosis" in ids
    assert all(s["description"] for s in schemas)


def test_create_session_emits_opening(client):
    response = client.post("/api/sessions", json={"schema_id": "lung-cancer-prognosis"})
    assert response.status_code == 201
    body = response.json()
    assert body["status"] == "active"
    assert body["turns"][0]["speaker"] == "patient"
    assert len(body["session_id"]) == 32


def test_create_session_unknown_schema(client):
    response = client.post("/api/sessions", json={"schema_id": "nope"})
    assert response.status_code == 404
    assert response.json()["error"]["code"] == "not_found"


def test_create_session_malformed_body(client):
    response = client.post("/api/sessions", json={})
    assert response.status_code == 400
    assert response.json()["error"]["code"] == "invalid_request"


def test_scripted_session_completes(client):
    _, body = _run_scripted(client)
    assert body["status"] == "completed"
    speakers = [t["speaker"] for t in body["turns"]]
    assert speakers == ["patient", "clinician"] * 3


def test_turn_errors(client):
    assert client.post("/api/sessions/feed0123456789abcdef0123456789ab/turns",
                       json={"text": "hi"}).status_code == 404

    created = client.post("/api/sessions", json={"schema_id": "lung-cancer-prognosis"})
    session_id = created.json()["session_id"]

    empty = client.post(f"/api/sessions/{session_id}/turns", json={"text": "   "})
    assert empty.status_code == 400
    assert empty.json()["error"]["code"] == "empty_text"

    bad_timing = client.post(
        f"/api/sessions/{session_id}/turns",
        json={"text": "hello", "start_ms": 100, "end_ms": 50},
    )
    assert bad_timing.status_code == 400
    assert bad_timing.json()["error"]["code"] == "invalid_timing"


def test_turn_after_completion_conflicts(client):
    session_id, _ = _run_scripted(client)
    response = client.post(f"/api/sessions/{session_id}/turns", json={"text": "hello?"})
    assert response.status_code == 409
    assert response.json()["error"]["code"] == "session_completed"


def test_end_session_is_idempotent(client):
    session_id, _ = _run_scripted(client)
    first = client.post(f"/api/sessions/{session_id}/end")
    second = client.post(f"/api/sessions/{session_id}/end")
    assert first.status_code == second.status_code == 200
    assert first.json()["report_id"] == second.json()["report_id"]
    assert first.json()["report"] == second.json()["report"]


def test_end_report_matches_analyze_bytes(client):
    session_id, body = _run_scripted(client)
    ended = client.post(f"/api/sessions/{session_id}/end").json()
    session_report = client.get(f"/api/reports/{ended['report_id']}")

    document = json.dumps({"turns": [
        {"speaker": t["speaker"], "text": t["text"]} for t in body["turns"]
    ]})
    analyzed = client.post(
        "/api/analyze", content=document, headers={"content-type": "application/json"}
    ).json()
    analyze_report = client.get(f"/api/reports/{analyzed['report_id']}")
    assert session_report.content == analyze_report.content


def test_analyze_rejects_bad_documents(client):
    response = client.post("/api/analyze", content="{oops")
    assert response.status_code == 400
    assert response.json()["error"]["code"] == "invalid_transcript"

    bad = json.dumps({"turns": [{"speaker": "chorus", "text": "la"}]})
    response = client.post("/api/analyze", content=bad)
    assert response.status_code == 400
    assert "speaker" in response.json()["error"]["message"]

    response = client.post("/api/analyze", content=b"\xff\xfe")
    assert response.status_code == 400


def test_report_lookup_rejects_unknown_and_malformed_ids(client):
    assert client.get("/api/reports/feed0123456789abcdef0123456789ab").status_code == 404
    assert client.get("/api/reports/not-a-report-id").status_code == 404
    assert client.get("/api/reports/..%2f..%2fetc").status_code == 404


def test_placeholder_page_served_without_ui(client):
    response = client.get("/")
    assert response.status_code == 200
    assert "api" in response.text.lower()


def test_static_ui_mounted_when_configured(tmp_path, cfg):
    ui_dir = tmp_path / "ui"
    ui_dir.mkdir()
    (ui_dir / "index.html").write_text("<!doctype html><title>trainer</title>")
    service_cfg = dataclasses.replace(cfg, data_dir=tmp_path / "data", ui_dir=ui_dir)
    with TestClient(create_app(service_cfg)) as client:
        assert "trainer" in client.get("/").text
        # the API stays reachable alongside the static mount
        assert client.get("/healthz").json() == {"status": "ok"}


def test_reports_survive_restart(service_cfg):
    with TestClient(create_app(service_cfg)) as client:
        session_id, _ = _run_scripted(client)
        report_id = client.post(f"/api/sessions/{session_id}/end").json()["report_id"]
        original = client.get(f"/api/reports/{report_id}").content

    with TestClient(create_app(service_cfg)) as client:
        assert client.get(f"/api/reports/{report_id}").content == original


def test_interrupted_session_restores_as_completed(service_cfg):
    with TestClient(create_app(service_cfg)) as client:
        created = client.post("/api/sessions", json={"schema_id": "lung-cancer-prognosis"})
        session_id = created.json()["session_id"]
        client.post(f"/api/sessions/{session_id}/turns", json={"text": SCRIPTED_LINES[0]})
        # no end: simulates a crash while the session was live

    with TestClient(create_app(service_cfg)) as client:
        blocked = client.post(f"/api/sessions/{session_id}/turns", json={"text": "hello"})
        assert blocked.status_code == 409

        ended = client.post(f"/api/sessions/{session_id}/end")
        assert ended.status_code == 200
        per_turn = ended.json()["report"]["per_turn"]
        assert [t["speaker"] for t in per_turn] == ["patient", "clinician", "patient"]

        again = client.post(f"/api/sessions/{session_id}/end")
        assert again.json()["report_id"] == ended.json()["report_id"]


def test_idle_sessions_expire(tmp_path, cfg):
    service_cfg = dataclasses.replace(
        cfg, data_dir=tmp_path / "data", session_idle_hours=0.02 / 3600
    )
    with TestClient(create_app(service_cfg)) as client:
        created = client.post("/api/sessions", json={"schema_id": "lung-cancer-prognosis"})
        session_id = created.json()["session_id"]
        time.sleep(0.05)
        response = client.post(f"/api/sessions/{session_id}/turns", json={"text": "hello"})
        assert response.status_code == 409
        assert client.post(f"/api/sessions/{session_id}/end").status_code == 200


def test_concurrent_sessions_match_serial(service_cfg):
    app = create_app(service_cfg)
    with TestClient(app) as reference_client:
        _, reference = _run_scripted(reference_client)
    reference_turns = [(t["speaker"], t["text"]) for t in reference["turns"]]

    def run_one(_):
        with TestClient(app) as worker_client:
            _, body = _run_scripted(worker_client)
        return [(t["speaker"], t["text"]) for t in body["turns"]]

    with ThreadPoolExecutor(max_workers=10) as pool:
        results = list(pool.map(run_one, range(10)))
    assert all(result == reference_turns for result in results)
