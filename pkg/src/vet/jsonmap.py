"""JSON mirror of the binary protocol.

Every wire message has a stable JSON form: snake_case field names,
numbers in the units their suffix states (hz, ma, us), binary frame
data as base64. The mapping is loss-free both ways, so session logs
and the WebSocket gateway carry exactly what the wire carries.
"""

from __future__ import annotations

import base64
from typing import Any

from . import protocol
from .protocol import FrameChunk, Message, MsgType, PerceptWire, Telemetry
from .stim import Channel, Polarity, StimParams

_TYPE_NAMES = {
    MsgType.FRAME_CHUNK: "frame_chunk",
    MsgType.STIM_COMMAND: "stim_command",
    MsgType.TELEMETRY: "telemetry",
    MsgType.ACK: "ack",
    MsgType.ERROR: "error",
    MsgType.PERCEPT_EVENT: "percept_event",
    MsgType.APP_EVENT: "app_event",
}
_TYPES_BY_NAME = {v: k for k, v in _TYPE_NAMES.items()}


def message_to_json(msg: Message) -> dict[str, Any]:
    out: dict[str, Any] = {"type": _TYPE_NAMES[msg.type], "seq": msg.seq}
    if msg.type is MsgType.FRAME_CHUNK:
        c = protocol.decode_chunk(msg.payload)
        out.update(
            frame_seq=c.frame_seq, chunk_index=c.chunk_index, chunk_count=c.chunk_count,
            width=c.width, height=c.height, offset=c.offset,
            data_b64=base64.b64encode(c.data).decode("ascii"),
        )
    elif msg.type is MsgType.STIM_COMMAND:
        p = protocol.decode_stim(msg.payload)
        out.update(
            channel=p.channel.value, polarity=p.polarity.value,
            amplitude_ma=p.amplitude_ma, frequency_hz=p.frequency_hz,
            pulse_width_us=p.pulse_width_us, duration_ms=p.duration_ms,
            electrodes=sorted(p.electrodes),
        )
    elif msg.type is MsgType.TELEMETRY:
        t = protocol.decode_telemetry(msg.payload)
        out.update(
            t_us=t.t_us, measured_ma=list(t.measured_ma),
            power_draw_ma=t.power_draw_ma, switch_bits=t.switch_bits,
            load_kohm=t.load_kohm,
        )
    elif msg.type is MsgType.ACK:
        out["acked_seq"] = protocol.decode_ack(msg.payload)
    elif msg.type is MsgType.ERROR:
        e = protocol.decode_error(msg.payload)
        out.update(code=e.code, detail=e.detail)
    elif msg.type is MsgType.PERCEPT_EVENT:
        p = protocol.decode_percept(msg.payload)
        out.update(t_us=p.t_us, location=p.location, zone=p.zone,
                   intensity_score=p.intensity_score)
    elif msg.type is MsgType.APP_EVENT:
        out["event"] = protocol.decode_app_event(msg.payload)
    return out


def message_from_json(obj: dict[str, Any]) -> Message:
    if not isinstance(obj, dict):
        raise ValueError("message must be a JSON object")
    name = obj.get("type")
    if name not in _TYPES_BY_NAME:
        raise ValueError(f"unknown message type {name!r}")
    mtype = _TYPES_BY_NAME[name]
    seq = obj.get("seq", 0)
    if not isinstance(seq, int) or not 0 <= seq < 2**32:
        raise ValueError("seq must be a u32")
    try:
        payload = _payload_from_json(mtype, obj)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"bad {name} fields: {exc!r}") from exc
    return Message(type=mtype, seq=seq, payload=payload)


def _payload_from_json(mtype: MsgType, obj: dict[str, Any]) -> bytes:
    if mtype is MsgType.FRAME_CHUNK:
        return protocol.encode_chunk(FrameChunk(
            frame_seq=int(obj["frame_seq"]), chunk_index=int(obj["chunk_index"]),
            chunk_count=int(obj["chunk_count"]), width=int(obj["width"]),
            height=int(obj["height"]), offset=int(obj["offset"]),
            data=base64.b64decode(obj["data_b64"], validate=True),
        ))
    if mtype is MsgType.STIM_COMMAND:
        return protocol.encode_stim(StimParams(
            amplitude_ma=float(obj["amplitude_ma"]),
            frequency_hz=float(obj["frequency_hz"]),
            pulse_width_us=int(obj["pulse_width_us"]),
            polarity=Polarity(obj["polarity"]),
            duration_ms=float(obj["duration_ms"]),
            electrodes=frozenset(int(e) for e in obj["electrodes"]),
            channel=Channel(obj.get("channel", "ac1")),
        ))
    if mtype is MsgType.TELEMETRY:
        measured = obj["measured_ma"]
        return protocol.encode_telemetry(Telemetry(
            t_us=int(obj["t_us"]),
            measured_ma=(float(measured[0]), float(measured[1])),
            power_draw_ma=float(obj["power_draw_ma"]),
            switch_bits=int(obj["switch_bits"]),
            load_kohm=float(obj["load_kohm"]),
        ))
    if mtype is MsgType.ACK:
        acked = obj.get("acked_seq")
        return protocol.encode_ack(None if acked is None else int(acked))
    if mtype is MsgType.ERROR:
        return protocol.encode_error(protocol.ErrorEvent(
            code=int(obj["code"]), detail=str(obj["detail"]),
        ))
    if mtype is MsgType.PERCEPT_EVENT:
        return protocol.encode_percept(PerceptWire(
            t_us=int(obj["t_us"]), location=str(obj["location"]),
            zone=str(obj["zone"]), intensity_score=float(obj["intensity_score"]),
        ))
    return protocol.encode_app_event(obj["event"])


SCHEMA: dict[str, Any] = {
    "framing": {
        "binary": "VETP | type u8 | seq u32 | length u32 | payload | crc32",
        "crc": "CRC-32 over type|seq|length|payload, little-endian",
        "max_payload_bytes": protocol.MAX_PAYLOAD,
        "frame_chunk_bytes": protocol.CHUNK_BYTES,
    },
    "messages": {
        "frame_chunk": {
            "direction": "device->host",
            "fields": {
                "frame_seq": "u32, frame counter",
                "chunk_index": "u16", "chunk_count": "u16",
                "width": "u16 px", "height": "u16 px",
                "offset": "u32, byte offset of this chunk",
                "data_b64": "base64 of row-major u8 pixels",
            },
        },
        "stim_command": {
            "direction": "host->device",
            "fields": {
                "channel": "ac1 | ac2",
                "polarity": "positive | negative | alternating",
                "amplitude_ma": "f64, clamped to 5 mA",
                "frequency_hz": "f64, clamped to [0.5, 100]",
                "pulse_width_us": "u32, clamped below half period",
                "duration_ms": "f64, clamped to 10000; 0 stops the channel",
                "electrodes": "list of pad indices; empty stops the channel",
            },
        },
        "telemetry": {
            "direction": "device->host",
            "fields": {
                "t_us": "u64 device clock",
                "measured_ma": "[ac1, ac2] delivered current",
                "power_draw_ma": "130 idle/active, 250 startup",
                "switch_bits": "2 bits per pad: 0 open, 1 stim, 2 ground",
                "load_kohm": "current skin-load estimate",
            },
        },
        "ack": {"direction": "device->host", "fields": {"acked_seq": "u32 or null"}},
        "error": {"direction": "both", "fields": {"code": "u16", "detail": "utf-8"}},
        "percept_event": {
            "direction": "device->host",
            "fields": {
                "t_us": "u64",
                "location": "upper_fingertip | lower_fingertip | contact_point",
                "zone": "fingertip | bottom | left | right | ventral",
                "intensity_score": "f64 in [0, 1]",
            },
        },
        "app_event": {
            "direction": "host->device",
            "fields": {
                "event": "JSON object; kinds: press {x, y, radius_px, peak_depth_mm,"
                         " vx_px, vy_px}, presses {items: [...]}, release {}",
            },
        },
    },
}
