"""Binary host<->device protocol.

Frame layout, little-endian throughout:

    magic "VETP" (4) | type (1) | seq (4) | length (4) | payload | crc (4)

crc is CRC-32 over type|seq|length|payload. Payloads are capped at 64 KiB;
tactile frames ride as 32 KiB chunks. The codec is pure: encode/decode
never touch sockets, and decode accepts arbitrary bytes, failing with a
typed error carrying the byte offset of the first problem.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from enum import IntEnum
from typing import Any

import numpy as np

from .frames import TactileFrame
from .stim import Channel, Polarity, StimParams, SwitchArray

MAGIC = b"VETP"
MAX_PAYLOAD = 64 * 1024
CHUNK_BYTES = 32 * 1024

_HEAD = struct.Struct("<4sBII")  # magic, type, seq, length
_CRC = struct.Struct("<I")


class MsgType(IntEnum):
    FRAME_CHUNK = 0x01
    STIM_COMMAND = 0x02
    TELEMETRY = 0x03
    ACK = 0x04
    ERROR = 0x05
    PERCEPT_EVENT = 0x06
    APP_EVENT = 0x07


@dataclass(frozen=True)
class Message:
    type: MsgType
    seq: int
    payload: bytes = b""


class ProtocolError(ValueError):
    """Base for decode failures; ``offset`` is where the problem starts."""

    def __init__(self, detail: str, offset: int):
        super().__init__(f"{detail} (at byte {offset})")
        self.offset = offset


class BadMagic(ProtocolError):
    pass


class Truncated(ProtocolError):
    pass


class CrcMismatch(ProtocolError):
    pass


class UnknownType(ProtocolError):
    pass


def encode(msg: Message) -> bytes:
    if len(msg.payload) > MAX_PAYLOAD:
        raise ValueError(f"payload of {len(msg.payload)} bytes exceeds {MAX_PAYLOAD}")
    head = _HEAD.pack(MAGIC, int(msg.type), msg.seq, len(msg.payload))
    crc = zlib.crc32(head[4:] + msg.payload)
    return head + msg.payload + _CRC.pack(crc)


def decode_prefix(data: bytes) -> tuple[Message, int]:
    """Decode one message from the front of ``data``; returns (msg, consumed)."""
    if len(data) < _HEAD.size:
        raise Truncated(f"need {_HEAD.size} header bytes, have {len(data)}", offset=len(data))
    magic, type_code, seq, length = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise BadMagic(f"magic {magic!r}", offset=0)
    if length > MAX_PAYLOAD:
        raise Truncated(f"declared payload of {length} bytes exceeds the cap", offset=9)
    total = _HEAD.size + length + _CRC.size
    if len(data) < total:
        raise Truncated(f"need {total} bytes, have {len(data)}", offset=len(data))
    body = data[4 : _HEAD.size + length]
    (crc,) = _CRC.unpack_from(data, _HEAD.size + length)
    if zlib.crc32(body) != crc:
        raise CrcMismatch("checksum failed", offset=_HEAD.size + length)
    try:
        mtype = MsgType(type_code)
    except ValueError:
        raise UnknownType(f"type 0x{type_code:02x}", offset=4) from None
    return Message(type=mtype, seq=seq, payload=bytes(data[_HEAD.size : _HEAD.size + length])), total


def decode(data: bytes) -> Message:
    """Decode exactly one message; trailing bytes are an error."""
    msg, consumed = decode_prefix(data)
    if consumed != len(data):
        raise ProtocolError(f"{len(data) - consumed} trailing bytes", offset=consumed)
    return msg


# --- payload codecs ----------------------------------------------------------

_POLARITY_CODE = {Polarity.POSITIVE: 0, Polarity.NEGATIVE: 1, Polarity.ALTERNATING: 2}
_POLARITY_FROM = {v: k for k, v in _POLARITY_CODE.items()}
_CHANNEL_CODE = {Channel.AC1: 0, Channel.AC2: 1}
_CHANNEL_FROM = {v: k for k, v in _CHANNEL_CODE.items()}

_STIM_HEAD = struct.Struct("<BBdddIB")  # channel, polarity, amp, freq, duration, pw, n_electrodes


def encode_stim(params: StimParams) -> bytes:
    ids = sorted(params.electrodes)
    if any(not 0 <= i < 256 for i in ids):
        raise ValueError("electrode ids must fit in one byte")
    head = _STIM_HEAD.pack(
        _CHANNEL_CODE[params.channel],
        _POLARITY_CODE[params.polarity],
        params.amplitude_ma,
        params.frequency_hz,
        params.duration_ms,
        params.pulse_width_us,
        len(ids),
    )
    return head + bytes(ids)


def decode_stim(payload: bytes) -> StimParams:
    if len(payload) < _STIM_HEAD.size:
        raise ValueError("stim command payload too short")
    channel, polarity, amp, freq, duration, pw, n = _STIM_HEAD.unpack_from(payload)
    ids = payload[_STIM_HEAD.size : _STIM_HEAD.size + n]
    if len(ids) != n or len(payload) != _STIM_HEAD.size + n:
        raise ValueError("stim command electrode list is inconsistent")
    if channel not in _CHANNEL_FROM or polarity not in _POLARITY_FROM:
        raise ValueError("unknown channel or polarity code")
    return StimParams(
        amplitude_ma=amp,
        frequency_hz=freq,
        pulse_width_us=pw,
        polarity=_POLARITY_FROM[polarity],
        duration_ms=duration,
        electrodes=frozenset(ids),
        channel=_CHANNEL_FROM[channel],
    )


@dataclass(frozen=True)
class Telemetry:
    t_us: int
    measured_ma: tuple[float, float]  # per output channel
    power_draw_ma: float
    switch_bits: int  # two bits per electrode: 0 open, 1 stim, 2 ground
    load_kohm: float


_TELEMETRY = struct.Struct("<QdddId")


def encode_telemetry(t: Telemetry) -> bytes:
    return _TELEMETRY.pack(
        t.t_us, t.measured_ma[0], t.measured_ma[1], t.power_draw_ma, t.switch_bits, t.load_kohm
    )


def decode_telemetry(payload: bytes) -> Telemetry:
    if len(payload) != _TELEMETRY.size:
        raise ValueError(f"telemetry payload must be {_TELEMETRY.size} bytes")
    t_us, m1, m2, power, bits, load = _TELEMETRY.unpack(payload)
    return Telemetry(
        t_us=t_us, measured_ma=(m1, m2), power_draw_ma=power, switch_bits=bits, load_kohm=load
    )


def pack_switch_bits(array: SwitchArray) -> int:
    return array.packed_bits()


@dataclass(frozen=True)
class PerceptWire:
    t_us: int
    location: str  # PerceptLocation value
    zone: str  # FingerZone value
    intensity_score: float


_LOCATIONS = ("upper_fingertip", "lower_fingertip", "contact_point")
_ZONES = ("fingertip", "bottom", "left", "right", "ventral")
_PERCEPT = struct.Struct("<QBBd")


def encode_percept(p: PerceptWire) -> bytes:
    return _PERCEPT.pack(
        p.t_us, _LOCATIONS.index(p.location), _ZONES.index(p.zone), p.intensity_score
    )


def decode_percept(payload: bytes) -> PerceptWire:
    if len(payload) != _PERCEPT.size:
        raise ValueError(f"percept payload must be {_PERCEPT.size} bytes")
    t_us, loc, zone, score = _PERCEPT.unpack(payload)
    if loc >= len(_LOCATIONS) or zone >= len(_ZONES):
        raise ValueError("unknown percept location or zone code")
    return PerceptWire(
        t_us=t_us, location=_LOCATIONS[loc], zone=_ZONES[zone], intensity_score=score
    )


@dataclass(frozen=True)
class FrameChunk:
    frame_seq: int
    chunk_index: int
    chunk_count: int
    width: int
    height: int
    offset: int
    data: bytes


_CHUNK_HEAD = struct.Struct("<IHHHHI")


def encode_chunk(c: FrameChunk) -> bytes:
    head = _CHUNK_HEAD.pack(
        c.frame_seq, c.chunk_index, c.chunk_count, c.width, c.height, c.offset
    )
    return head + c.data


def decode_chunk(payload: bytes) -> FrameChunk:
    if len(payload) < _CHUNK_HEAD.size:
        raise ValueError("frame chunk payload too short")
    frame_seq, idx, count, w, h, offset = _CHUNK_HEAD.unpack_from(payload)
    return FrameChunk(
        frame_seq=frame_seq,
        chunk_index=idx,
        chunk_count=count,
        width=w,
        height=h,
        offset=offset,
        data=bytes(payload[_CHUNK_HEAD.size :]),
    )


def chunk_frame(frame: TactileFrame) -> list[FrameChunk]:
    """Split a frame's quantized pixels into wire chunks."""
    data = frame.quantized().tobytes()
    pieces = [data[i : i + CHUNK_BYTES] for i in range(0, len(data), CHUNK_BYTES)] or [b""]
    return [
        FrameChunk(
            frame_seq=frame.seq,
            chunk_index=i,
            chunk_count=len(pieces),
            width=frame.width,
            height=frame.height,
            offset=i * CHUNK_BYTES,
            data=piece,
        )
        for i, piece in enumerate(pieces)
    ]


class FrameAssembler:
    """Rebuilds frames from chunks; tolerates interleaving across frames."""

    def __init__(self) -> None:
        self._pending: dict[int, dict[int, FrameChunk]] = {}

    def feed(self, chunk: FrameChunk, t_us: int = 0) -> TactileFrame | None:
        got = self._pending.setdefault(chunk.frame_seq, {})
        got[chunk.chunk_index] = chunk
        if len(got) < chunk.chunk_count:
            return None
        del self._pending[chunk.frame_seq]
        parts = [got[i] for i in sorted(got)]
        if any(p.chunk_count != len(parts) for p in parts):
            raise ValueError(f"frame {chunk.frame_seq}: inconsistent chunk counts")
        blob = bytearray(chunk.width * chunk.height)
        for p in parts:
            blob[p.offset : p.offset + len(p.data)] = p.data
        total = sum(len(p.data) for p in parts)
        if total != chunk.width * chunk.height:
            raise ValueError(f"frame {chunk.frame_seq}: {total} bytes for {chunk.width}x{chunk.height}")
        pixels = np.frombuffer(bytes(blob), dtype=np.uint8).reshape(chunk.height, chunk.width)
        return TactileFrame.from_quantized(chunk.frame_seq, t_us, pixels)


@dataclass(frozen=True)
class ErrorEvent:
    code: int
    detail: str


def encode_error(e: ErrorEvent) -> bytes:
    return struct.pack("<H", e.code) + e.detail.encode("utf-8")


def decode_error(payload: bytes) -> ErrorEvent:
    if len(payload) < 2:
        raise ValueError("error payload too short")
    (code,) = struct.unpack_from("<H", payload)
    return ErrorEvent(code=code, detail=payload[2:].decode("utf-8"))


def encode_ack(acked_seq: int | None = None) -> bytes:
    return b"" if acked_seq is None else struct.pack("<I", acked_seq)


def decode_ack(payload: bytes) -> int | None:
    if payload == b"":
        return None
    if len(payload) != 4:
        raise ValueError("ack payload must be empty or a 4-byte sequence number")
    return struct.unpack("<I", payload)[0]


def encode_app_event(event: dict[str, Any]) -> bytes:
    return json.dumps(event, sort_keys=True, separators=(",", ":")).encode("utf-8")


def decode_app_event(payload: bytes) -> dict[str, Any]:
    try:
        event = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ValueError(f"app event payload is not JSON: {exc}") from exc
    if not isinstance(event, dict):
        raise ValueError("app event must be a JSON object")
    return event
