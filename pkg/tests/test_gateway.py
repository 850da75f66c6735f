import base64
import math
import socket
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from vet.config import default_config
from vet.gateway import create_gateway
from vet.host import ERR_BAD_PAYLOAD, SimulatedDevice
from vet.transport import serve_device_tcp


STIM_JSON = {
    "type": "stim_command", "seq": 7, "channel": "ac1", "polarity": "alternating",
    "amplitude_ma": 2.0, "frequency_hz": 50.0, "pulse_width_us": 200,
    "duration_ms": 300.0, "electrodes": [5, 6, 9, 10],
}

PRESS_JSON = {
    "type": "app_event", "seq": 1,
    "event": {"kind": "press", "x": 32.0, "y": 32.0, "radius_px": 6.0,
              "peak_depth_mm": 1.8},
}


def collect(ws, want, limit=600):
    """Read until one message of each wanted type has arrived."""
    seen = {}
    for _ in range(limit):
        obj = ws.receive_json()
        seen.setdefault(obj["type"], obj)
        if all(w in seen for w in want):
            return seen
    raise AssertionError(f"saw only {list(seen)} while waiting for {want}")


@pytest.fixture()
def client():
    app = create_gateway(default_config(), seed=0, tick_ms=2.0)
    with TestClient(app) as c:
        yield c


def test_schema_documents_every_message(client):
    schema = client.get("/schema").json()
    assert schema["websocket"] == "/ws"
    for name in ["frame_chunk", "stim_command", "telemetry", "ack", "error",
                 "percept_event", "app_event"]:
        assert name in schema["messages"], name
    assert "fields" in schema["messages"]["telemetry"]
    assert schema["framing"]["max_payload_bytes"] == 64 * 1024


def test_stim_command_round_trip_over_ws(client):
    with client.websocket_connect("/ws") as ws:
        ws.send_json(STIM_JSON)
        seen = collect(ws, {"ack", "telemetry", "percept_event"})
        assert seen["ack"]["acked_seq"] == 7
        assert seen["percept_event"]["location"] == "contact_point"
        assert seen["telemetry"]["power_draw_ma"] in (130.0, 250.0)


def test_press_produces_frames_and_telemetry(client):
    with client.websocket_connect("/ws") as ws:
        ws.send_json(PRESS_JSON)
        seen = collect(ws, {"frame_chunk", "telemetry"})
        chunk = seen["frame_chunk"]
        assert chunk["width"] == 64 and chunk["height"] == 64
        assert chunk["chunk_count"] == 1 and chunk["data_b64"]


def test_two_clients_both_receive_broadcasts(client):
    with client.websocket_connect("/ws") as a, client.websocket_connect("/ws") as b:
        seen_a = collect(a, {"telemetry"})
        seen_b = collect(b, {"telemetry"})
        assert seen_a["telemetry"]["power_draw_ma"] in (130.0, 250.0)
        assert seen_b["telemetry"]["power_draw_ma"] in (130.0, 250.0)


def test_malformed_json_error_stays_private(client):
    with client.websocket_connect("/ws") as bad, client.websocket_connect("/ws") as good:
        bad.send_text("{nope")
        reply = bad.receive_json()
        # the offender hears about it...
        while reply["type"] != "error":
            reply = bad.receive_json()
        assert reply["code"] == ERR_BAD_PAYLOAD
        # ...while an innocent bystander sees broadcasts but never that error
        for _ in range(40):
            obj = good.receive_json()
            assert not (obj["type"] == "error" and obj.get("code") == ERR_BAD_PAYLOAD)


def test_unknown_inbound_type_rejected(client):
    with client.websocket_connect("/ws") as ws:
        ws.send_json({"type": "telemetry", "seq": 0, "t_us": 0,
                      "measured_ma": [0, 0], "power_draw_ma": 130.0,
                      "switch_bits": 0, "load_kohm": 50.0})
        obj = ws.receive_json()
        while obj["type"] != "error":
            obj = ws.receive_json()
        assert "stim_command" in obj["detail"]


def test_commands_echo_to_passive_clients(client):
    with client.websocket_connect("/ws") as viewer, client.websocket_connect("/ws") as driver:
        driver.send_json(STIM_JSON)
        kinds, echo = [], None
        for _ in range(600):
            obj = viewer.receive_json()
            if obj["type"] in ("stim_command", "ack") and obj["type"] not in kinds:
                kinds.append(obj["type"])
                if obj["type"] == "stim_command":
                    echo = obj
                if len(kinds) == 2:
                    break
        assert kinds == ["stim_command", "ack"]  # echo lands before its reply
        assert echo["frequency_hz"] == STIM_JSON["frequency_hz"]
        assert echo["amplitude_ma"] == STIM_JSON["amplitude_ma"]


def test_command_order_preserved(client):
    with client.websocket_connect("/ws") as ws:
        for seq in range(3, 9):
            ws.send_json({**STIM_JSON, "seq": seq})
        acked = []
        for _ in range(600):
            obj = ws.receive_json()
            if obj["type"] == "ack":
                acked.append(obj["acked_seq"])
                if len(acked) == 6:
                    break
        assert acked == [3, 4, 5, 6, 7, 8]


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_gateway_bridges_tcp_device():
    cfg = default_config()
    port = free_port()
    server = serve_device_tcp(SimulatedDevice(cfg, seed=2), port=port, )
    try:
        app = create_gateway(cfg, device_endpoint=f"tcp://127.0.0.1:{port}", tick_ms=2.0)
        with TestClient(app) as client:
            with client.websocket_connect("/ws") as ws:
                ws.send_json(STIM_JSON)
                seen = collect(ws, {"ack", "telemetry"})
                assert seen["ack"]["acked_seq"] == 7
    finally:
        server.shutdown()
        server.server_close()


def test_gateway_reports_tcp_device_loss():
    cfg = default_config()
    port = free_port()
    server = serve_device_tcp(SimulatedDevice(cfg, seed=2), port=port)
    app = create_gateway(cfg, device_endpoint=f"tcp://127.0.0.1:{port}", tick_ms=2.0)
    with TestClient(app) as client:
        with client.websocket_connect("/ws") as ws:
            collect(ws, {"telemetry"})
            server.shutdown()
            server.server_close()
            time.sleep(0.05)
            ws.send_json(STIM_JSON)  # poke the dead link
            for _ in range(400):
                obj = ws.receive_json()
                if obj["type"] == "error":
                    return
            raise AssertionError("device loss never reported")


def test_bad_endpoint_rejected():
    with pytest.raises(ValueError):
        create_gateway(default_config(), device_endpoint="carrier-pigeon")


def _deficit_centroid(chunk, baseline=0.8):
    """Contact centroid from one broadcast frame, the way a UI client sees it."""
    raw = np.frombuffer(base64.b64decode(chunk["data_b64"]), dtype=np.uint8)
    img = raw.reshape(chunk["height"], chunk["width"]).astype(np.float64) / 255.0
    deficit = np.maximum(baseline - img, 0.0)
    deficit[deficit < 0.05] = 0.0  # noise floor
    total = deficit.sum()
    if total == 0:
        return None
    ys, xs = np.mgrid[0 : chunk["height"], 0 : chunk["width"]]
    return float((xs * deficit).sum() / total), float((ys * deficit).sum() / total)


def test_drag_echo_tracks_pointer_within_2px(client):
    # ~90 Hz pointer input against ~30 Hz frames: every frame's contact
    # centroid must sit within 2 px of where the pointer recently was
    path = [(24.0 + 0.6 * k, 24.0 + 0.45 * k) for k in range(36)]
    with client.websocket_connect("/ws") as ws:
        sent = []
        checked = 0
        for k in range(0, len(path), 3):
            for x, y in path[k : k + 3]:
                ws.send_json({"type": "app_event", "seq": k,
                              "event": {"kind": "press", "x": x, "y": y,
                                        "radius_px": 6.0, "peak_depth_mm": 1.5}})
                sent.append((x, y))
            chunk = collect(ws, {"frame_chunk"})["frame_chunk"]
            centroid = _deficit_centroid(chunk)
            if centroid is None or len(sent) < 6:
                continue  # frame rendered before the first presses landed
            trail = sent[-6:]
            err = min(math.hypot(centroid[0] - x, centroid[1] - y) for x, y in trail)
            assert err <= 2.0, f"frame centroid {centroid} strays {err:.2f}px off the drag"
            checked += 1
    assert checked >= 8, f"only {checked} frames carried a contact"
