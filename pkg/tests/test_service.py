import base64

import numpy as np
import pytest
from starlette.testclient import TestClient

from polarsnake import evaluate, fileio
from polarsnake.bspline import contour_from_dict
from polarsnake.cli import main as cli_main
from polarsnake.config import PipelineConfig
from polarsnake.service import create_app


@pytest.fixture
def client():
    app = create_app(PipelineConfig())
    with TestClient(app) as c:
        yield c


def _open_phantom(ws, seed=3, corruption=1, size=None):
    spec = {"seed": seed, "corruption": corruption}
    if size is not None:
        spec["size"] = size
    ws.send_json({"kind": "open", "payload": {"phantom": spec}})
    reply = ws.receive_json()
    assert reply["kind"] == "state", reply
    return reply


def test_health(client):
    body = client.get("/health").json()
    assert body["active_sessions"] == 0
    assert "version" in body


def test_open_phantom_session(client):
    with client.websocket_connect("/ws") as ws:
        state = _open_phantom(ws)
        payload = state["payload"]
        assert payload["rev"] == 0
        assert payload["stage"] == "interactive"
        assert 0.0 <= payload["dice_stage_one"] <= 1.0
        assert payload["contour"]["n_knots"] == 32
        assert payload["shape"] == [128, 128]
        assert payload["image_png_b64"]
        # health now reports the session
        assert client.get("/health").json()["active_sessions"] == 1


def test_two_sessions_are_isolated(client):
    with client.websocket_connect("/ws") as ws:
        s1 = _open_phantom(ws, seed=1)["payload"]
        s2 = _open_phantom(ws, seed=2)["payload"]
        assert s1["session_id"] != s2["session_id"]
        ox, oy = s1["contour"]["origin"]
        rr = s1["contour"]["coefficients"][0] + 5
        ws.send_json({"kind": "add_anchor", "session_id": s1["session_id"],
                      "payload": {"x": ox + rr, "y": oy}})
        ws.receive_json()
        # second session unchanged
        ws.send_json({"kind": "step", "session_id": s2["session_id"]})
        after = ws.receive_json()["payload"]
        assert after["anchors"] == []


def test_anchor_on_contour_is_idempotent(client):
    with client.websocket_connect("/ws") as ws:
        state = _open_phantom(ws, seed=5)["payload"]
        sid = state["session_id"]
        # settle first
        for _ in range(20):
            ws.send_json({"kind": "step", "session_id": sid})
            state = ws.receive_json()["payload"]
            if state["displacement"] < 0.05:
                break
        coeffs = np.array(state["contour"]["coefficients"])
        ox, oy = state["contour"]["origin"]
        from polarsnake import BSplineContour
        theta = 1.0
        rho = evaluate(BSplineContour(coeffs), theta)
        ws.send_json({"kind": "add_anchor", "session_id": sid,
                      "payload": {"x": ox + rho * np.cos(theta), "y": oy + rho * np.sin(theta)}})
        after = ws.receive_json()["payload"]
        new_coeffs = np.array(after["contour"]["coefficients"])
        thetas = 2 * np.pi * np.arange(32) / 32
        drift = np.abs(evaluate(BSplineContour(new_coeffs), thetas)
                       - evaluate(BSplineContour(coeffs), thetas)).max()
        assert drift < 0.05


def test_add_remove_anchor_restores_over_wire(client):
    # symmetric phantom via uploaded disk images
    from conftest import make_disk_image

    image = make_disk_image(128, (64.0, 64.0), 22.0, inside=0.85, outside=0.15)
    prob = make_disk_image(128, (64.0, 64.0), 22.0, inside=0.95, outside=0.05)
    img_b = fileio.encode_png(np.rint(image * 255))
    prob_b = fileio.encode_png(np.rint(prob * 255))
    with client.websocket_connect("/ws") as ws:
        ws.send_json({"kind": "open", "payload": {
            "image_b64": base64.b64encode(img_b).decode(),
            "prob_map_b64": base64.b64encode(prob_b).decode()}})
        state = ws.receive_json()["payload"]
        sid = state["session_id"]
        for _ in range(30):
            ws.send_json({"kind": "step", "session_id": sid})
            state = ws.receive_json()["payload"]
            if state["displacement"] < 0.05:
                break
        base = np.array(state["contour"]["coefficients"])
        ox, oy = state["contour"]["origin"]

        theta = 2.0
        from polarsnake import BSplineContour
        rho = evaluate(BSplineContour(base), theta) + 8.0
        ws.send_json({"kind": "add_anchor", "session_id": sid,
                      "payload": {"x": ox + rho * np.cos(theta), "y": oy + rho * np.sin(theta)}})
        state = ws.receive_json()["payload"]
        anchor_id = state["anchors"][0]["id"]
        for _ in range(30):
            ws.send_json({"kind": "step", "session_id": sid})
            state = ws.receive_json()["payload"]
            if state["displacement"] < 0.05:
                break

        ws.send_json({"kind": "remove_anchor", "session_id": sid,
                      "payload": {"id": anchor_id}})
        state = ws.receive_json()["payload"]
        for _ in range(60):
            ws.send_json({"kind": "step", "session_id": sid})
            state = ws.receive_json()["payload"]
            if state["displacement"] < 0.05:
                break
        final = np.array(state["contour"]["coefficients"])
        thetas = 2 * np.pi * np.arange(32) / 32
        dev = np.abs(evaluate(BSplineContour(final), thetas)
                     - evaluate(BSplineContour(base), thetas))
        assert dev.max() <= 0.2


def test_error_codes(client):
    with client.websocket_connect("/ws") as ws:
        ws.send_json({"kind": "step", "session_id": "bogus"})
        reply = ws.receive_json()
        assert reply["kind"] == "error"
        assert reply["payload"]["code"] == "SESSION_NOT_FOUND"

        state = _open_phantom(ws, seed=1)["payload"]
        sid = state["session_id"]

        ws.send_json({"kind": "move_anchor", "session_id": sid,
                      "payload": {"id": 41, "x": 10, "y": 10}})
        assert ws.receive_json()["payload"]["code"] == "ANCHOR_NOT_FOUND"

        ws.send_json({"kind": "add_anchor", "session_id": sid,
                      "payload": {"x": 4000.0, "y": 10.0}})
        assert ws.receive_json()["payload"]["code"] == "INPUT_RANGE"

        ws.send_json({"kind": "warp", "session_id": sid})
        assert ws.receive_json()["payload"]["code"] == "BAD_MESSAGE"

        # mismatched uploaded shapes
        a = fileio.encode_png(np.full((32, 32), 200, dtype=np.uint8))
        b = fileio.encode_png(np.full((64, 64), 200, dtype=np.uint8))
        ws.send_json({"kind": "open", "payload": {
            "image_b64": base64.b64encode(a).decode(),
            "prob_map_b64": base64.b64encode(b).decode()}})
        assert ws.receive_json()["payload"]["code"] == "INPUT_SHAPE"

        # empty probability map
        c = fileio.encode_png(np.zeros((32, 32), dtype=np.uint8))
        d = fileio.encode_png(np.zeros((32, 32), dtype=np.uint8))
        ws.send_json({"kind": "open", "payload": {
            "image_b64": base64.b64encode(c).decode(),
            "prob_map_b64": base64.b64encode(d).decode()}})
        assert ws.receive_json()["payload"]["code"] == "INIT_EMPTY"


def test_set_weights_and_reset(client):
    with client.websocket_connect("/ws") as ws:
        state = _open_phantom(ws, seed=8)["payload"]
        sid = state["session_id"]
        stage_one = np.array(state["contour"]["coefficients"])

        ws.send_json({"kind": "set_weights", "session_id": sid,
                      "payload": {"alpha": 0.2, "beta": 0.1, "gamma": 5.0}})
        state = ws.receive_json()["payload"]
        assert state["weights"] == {"alpha": 0.2, "beta": 0.1, "gamma": 5.0}

        ox, oy = state["contour"]["origin"]
        rr = state["contour"]["coefficients"][0] + 6
        ws.send_json({"kind": "add_anchor", "session_id": sid, "payload": {"x": ox + rr, "y": oy}})
        state = ws.receive_json()["payload"]
        assert len(state["anchors"]) == 1

        ws.send_json({"kind": "reset", "session_id": sid})
        state = ws.receive_json()["payload"]
        assert state["anchors"] == []
        assert np.array_equal(np.array(state["contour"]["coefficients"]), stage_one)

        ws.send_json({"kind": "close", "session_id": sid})
        assert ws.receive_json()["payload"]["closed"] is True
        ws.send_json({"kind": "step", "session_id": sid})
        assert ws.receive_json()["payload"]["code"] == "SESSION_NOT_FOUND"


def test_export_matches_cli_artifacts(tmp_path, client):
    # same 8-bit inputs through the CLI and the service yield identical artifacts
    pdir = tmp_path / "ph"
    assert cli_main(["phantom", "--seed", "7", "--corruption", "1",
                     "--out-dir", str(pdir)]) == 0
    out = tmp_path / "out"
    assert cli_main(["smooth", str(pdir / "prob_map.png"),
                     "--image", str(pdir / "image.png"), "--out", str(out)]) == 0
    cli_contour, _ = fileio.load_contour(out / "contour.json")
    cli_mask = fileio.load_mask(out / "mask.png")

    with client.websocket_connect("/ws") as ws:
        ws.send_json({"kind": "open", "payload": {
            "image_b64": base64.b64encode((pdir / "image.png").read_bytes()).decode(),
            "prob_map_b64": base64.b64encode((pdir / "prob_map.png").read_bytes()).decode()}})
        state = ws.receive_json()["payload"]
        sid = state["session_id"]

    resp = client.get(f"/sessions/{sid}/export").json()
    served, _ = contour_from_dict(resp["contour"])
    assert np.array_equal(served.coefficients, cli_contour.coefficients)
    served_mask = fileio.decode_pixels(base64.b64decode(resp["mask_png_b64"])) >= 128
    assert np.array_equal(served_mask, cli_mask)


def test_export_unknown_session(client):
    resp = client.get("/sessions/doesnotexist/export")
    assert resp.status_code == 404
    assert resp.json()["error"]["code"] == "SESSION_NOT_FOUND"


def test_session_idle_expiry():
    app = create_app(PipelineConfig(), idle_timeout_s=0.0)
    with TestClient(app) as client:
        with client.websocket_connect("/ws") as ws:
            state = _open_phantom(ws, seed=1)["payload"]
            sid = state["session_id"]
            ws.send_json({"kind": "step", "session_id": sid})
            assert ws.receive_json()["payload"]["code"] == "SESSION_NOT_FOUND"


def test_replay_reproduces_export_bit_for_bit():
    config = PipelineConfig()

    def run_script():
        app = create_app(config)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                state = _open_phantom(ws, seed=12, corruption=1)["payload"]
                sid = state["session_id"]
                ox, oy = state["contour"]["origin"]
                r0 = state["contour"]["coefficients"][0]
                script = [
                    {"kind": "add_anchor", "payload": {"x": ox + r0 + 7, "y": oy}},
                    {"kind": "step"},
                    {"kind": "add_anchor", "payload": {"x": ox, "y": oy + r0 + 4}},
                    {"kind": "step"},
                    {"kind": "move_anchor", "payload": {"id": 1, "x": ox + r0 + 3, "y": oy + 2}},
                    {"kind": "step"},
                ]
                for msg in script:
                    ws.send_json({**msg, "session_id": sid})
                    reply = ws.receive_json()
                    assert reply["kind"] == "state", reply
            return client.get(f"/sessions/{sid}/export").json()

    first = run_script()
    second = run_script()
    c1, _ = contour_from_dict(first["contour"])
    c2, _ = contour_from_dict(second["contour"])
    assert np.array_equal(c1.coefficients, c2.coefficients)
    assert first["mask_png_b64"] == second["mask_png_b64"]


def test_echo_field_round_trips(client):
    with client.websocket_connect("/ws") as ws:
        ws.send_json({"kind": "open", "payload": {"phantom": {"seed": 1}}, "echo": 42})
        assert ws.receive_json()["echo"] == 42
