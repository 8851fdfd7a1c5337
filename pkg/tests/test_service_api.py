import json

import pytest
from fastapi.testclient import TestClient

from cinegrade.service import create_app

from conftest import make_engine, reflector_update, standard_grade_fixture


@pytest.fixture
def client(tmp_path, anchor_png):
    fixture = standard_grade_fixture(
        tmp_path,
        reflector=[
            reflector_update({"lift.b": 0.01}, "slight"),
            {"action": "approve"},
        ],
    )
    engine = make_engine(tmp_path, fixture)
    return TestClient(create_app(engine)), str(anchor_png)


def create_session(client, anchor, **extra):
    resp = client.post(
        "/sessions",
        json={"source": anchor, "curve": "SLog3", "gamut": "SGamut3Cine", **extra},
    )
    assert resp.status_code == 200
    return resp.json()["id"]


class TestSessions:
    def test_create_returns_document(self, client):
        client, anchor = client
        resp = client.post(
            "/sessions",
            json={"source": anchor, "curve": "SLog3", "gamut": "SGamut3Cine"},
        )
        assert resp.status_code == 200
        doc = resp.json()
        assert doc["status"] == "active"
        assert doc["iteration"] == -1

    def test_create_unknown_curve_is_client_error(self, client):
        client, anchor = client
        resp = client.post(
            "/sessions",
            json={"source": anchor, "curve": "Nope", "gamut": "SGamut3Cine"},
        )
        assert resp.status_code == 400
        body = resp.json()
        assert set(body["error"]) == {"code", "message"}

    def test_state_unknown_session_404(self, client):
        client, _ = client
        resp = client.get("/sessions/nonexistent/state")
        assert resp.status_code == 404
        assert resp.json()["error"]["code"] == "session_not_found"


class TestGradeAndFeedback:
    def test_grade_then_feedback_then_approve(self, client):
        client, anchor = client
        sid = create_session(client, anchor)

        resp = client.post(f"/sessions/{sid}/grade")
        assert resp.status_code == 200
        assert resp.json()["iteration"] == 0
        assert resp.json()["params_history"][0]["gain"][0] == pytest.approx(1.30)

        resp = client.post(
            f"/sessions/{sid}/feedback", json={"text": "slightly cooler shadows"}
        )
        assert resp.status_code == 200
        assert resp.json()["iteration"] == 1
        assert resp.json()["params_history"][1]["lift"][2] == pytest.approx(0.01)

        resp = client.post(f"/sessions/{sid}/feedback", json={"text": "perfect"})
        assert resp.status_code == 200
        assert resp.json()["status"] == "approved"

    def test_double_grade_conflict(self, client):
        client, anchor = client
        sid = create_session(client, anchor)
        client.post(f"/sessions/{sid}/grade")
        resp = client.post(f"/sessions/{sid}/grade")
        assert resp.status_code == 409

    def test_feedback_before_grade_conflict(self, client):
        client, anchor = client
        sid = create_session(client, anchor)
        resp = client.post(f"/sessions/{sid}/feedback", json={"text": "warmer"})
        assert resp.status_code == 409

    def test_empty_feedback_rejected(self, client):
        client, anchor = client
        sid = create_session(client, anchor)
        client.post(f"/sessions/{sid}/grade")
        resp = client.post(f"/sessions/{sid}/feedback", json={"text": "   "})
        assert resp.status_code == 400


class TestArtifacts:
    def graded(self, client, anchor):
        sid = create_session(client, anchor)
        client.post(f"/sessions/{sid}/grade")
        return sid

    def test_preview_png(self, client):
        client, anchor = client
        sid = self.graded(client, anchor)
        resp = client.get(f"/sessions/{sid}/preview", params={"iteration": 0})
        assert resp.status_code == 200
        assert resp.content[:8] == b"\x89PNG\r\n\x1a\n"

    def test_preview_thumbnail_size(self, client):
        client, anchor = client
        sid = self.graded(client, anchor)
        resp = client.get(f"/sessions/{sid}/preview", params={"size": 8})
        assert resp.status_code == 200
        import cv2
        import numpy as np

        img = cv2.imdecode(
            np.frombuffer(resp.content, np.uint8), cv2.IMREAD_COLOR
        )
        assert max(img.shape[:2]) == 8

    def test_preview_out_of_range(self, client):
        client, anchor = client
        sid = self.graded(client, anchor)
        resp = client.get(f"/sessions/{sid}/preview", params={"iteration": 5})
        assert resp.status_code == 400

    def test_export_cube(self, client):
        client, anchor = client
        sid = self.graded(client, anchor)
        resp = client.get(f"/sessions/{sid}/export/cube")
        assert resp.status_code == 200
        assert "LUT_3D_SIZE 33" in resp.text
        assert resp.headers["content-disposition"].endswith('grade_iter0.cube"')

    def test_export_cdl(self, client):
        client, anchor = client
        sid = self.graded(client, anchor)
        resp = client.get(f"/sessions/{sid}/export/cdl")
        assert resp.status_code == 200
        assert "<ColorCorrection" in resp.text
        assert "xml" in resp.headers["content-type"]

    def test_export_report(self, client):
        client, anchor = client
        sid = self.graded(client, anchor)
        resp = client.get(f"/sessions/{sid}/export/report")
        assert resp.status_code == 200
        report = json.loads(resp.content)
        assert report["iteration"] == 0
        assert report["session"]["id"] == sid

    def test_tree(self, client):
        client, anchor = client
        sid = self.graded(client, anchor)
        resp = client.get(f"/sessions/{sid}/tree")
        assert resp.status_code == 200
        assert len(resp.json()["nodes"]) == 10
        assert resp.json()["best_id"] == 3

    def test_state(self, client):
        client, anchor = client
        sid = self.graded(client, anchor)
        resp = client.get(f"/sessions/{sid}/state")
        assert resp.status_code == 200
        assert resp.json()["iteration"] == 0
