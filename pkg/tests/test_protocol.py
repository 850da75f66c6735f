import socket
import struct

import numpy as np
import pytest

from vet.config import default_config
from vet.frames import TactileFrame
from vet.host import SimulatedDevice
from vet.protocol import (
    CHUNK_BYTES,
    MAX_PAYLOAD,
    BadMagic,
    CrcMismatch,
    ErrorEvent,
    FrameAssembler,
    FrameChunk,
    Message,
    MsgType,
    ProtocolError,
    Telemetry,
    Truncated,
    UnknownType,
    chunk_frame,
    decode,
    decode_ack,
    decode_app_event,
    decode_chunk,
    decode_error,
    decode_percept,
    decode_prefix,
    decode_stim,
    decode_telemetry,
    encode,
    encode_ack,
    encode_app_event,
    encode_chunk,
    encode_error,
    encode_percept,
    encode_stim,
    encode_telemetry,
    PerceptWire,
)
from vet.stim import Channel, Polarity, StimParams
from vet.transport import (
    StreamDecoder,
    connect_device_tcp,
    gateway_address,
    in_proc_pair,
    serve_device_tcp,
)


def random_message(rng) -> Message:
    mtype = MsgType(int(rng.choice([0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07])))
    payload = rng.bytes(int(rng.integers(0, 2048)))
    return Message(type=mtype, seq=int(rng.integers(0, 2**32)), payload=payload)


# --- framing ------------------------------------------------------------------


def test_ack_wire_example():
    data = encode(Message(type=MsgType.ACK, seq=0, payload=b""))
    assert len(data) == 17
    assert data[:5] == bytes([0x56, 0x45, 0x54, 0x50, 0x04])


def test_round_trip_many_random_messages():
    rng = np.random.default_rng(7)
    for _ in range(10_000):
        msg = random_message(rng)
        assert decode(encode(msg)) == msg


def test_empty_input_truncated():
    with pytest.raises(Truncated) as ei:
        decode(b"")
    assert ei.value.offset == 0


def test_bad_magic_offset_zero():
    data = bytearray(encode(Message(type=MsgType.ACK, seq=1)))
    data[0] ^= 0xFF
    with pytest.raises(BadMagic) as ei:
        decode(bytes(data))
    assert ei.value.offset == 0


def test_unknown_type_rejected():
    # splice an unknown type code and fix the crc so only the type is wrong
    import zlib

    head = b"VETP" + bytes([0x7F]) + struct.pack("<II", 5, 0)
    crc = struct.pack("<I", zlib.crc32(head[4:]))
    with pytest.raises(UnknownType) as ei:
        decode(head + crc)
    assert ei.value.offset == 4


def test_truncation_every_prefix_rejected():
    data = encode(Message(type=MsgType.TELEMETRY, seq=9, payload=b"x" * 40))
    for cut in range(len(data)):
        with pytest.raises((Truncated, CrcMismatch)):
            decode(data[:cut])


def test_single_bit_flips_always_rejected():
    # 64-byte message: 13 header + 47 payload + 4 crc
    msg = Message(type=MsgType.APP_EVENT, seq=123456, payload=bytes(range(47)))
    data = encode(msg)
    assert len(data) == 64
    for bit in range(len(data) * 8):
        corrupt = bytearray(data)
        corrupt[bit // 8] ^= 1 << (bit % 8)
        with pytest.raises(ProtocolError):
            decode(bytes(corrupt))


def test_oversized_payload_refused():
    with pytest.raises(ValueError):
        encode(Message(type=MsgType.APP_EVENT, seq=0, payload=b"\0" * (MAX_PAYLOAD + 1)))


def test_declared_length_beyond_cap_is_truncated_error():
    head = b"VETP" + bytes([0x04]) + struct.pack("<II", 0, MAX_PAYLOAD + 1)
    with pytest.raises(Truncated):
        decode(head + b"\0" * 10)


def test_trailing_bytes_rejected_but_prefix_ok():
    data = encode(Message(type=MsgType.ACK, seq=3)) + b"junk"
    with pytest.raises(ProtocolError):
        decode(data)
    msg, consumed = decode_prefix(data)
    assert msg.seq == 3 and consumed == len(data) - 4


# --- payload codecs -----------------------------------------------------------


def random_stim(rng) -> StimParams:
    freq = float(rng.uniform(0.5, 100.0))
    max_pw = max(1, int(1_000_000.0 / freq / 2) - 1)
    pads = frozenset(int(i) for i in rng.choice(16, size=rng.integers(0, 16), replace=False))
    duration = float(rng.uniform(0, 10_000))
    if duration > 0 and not pads:
        pads = frozenset({int(rng.integers(0, 16))})
    return StimParams(
        amplitude_ma=float(rng.uniform(0, 5)),
        frequency_hz=freq,
        pulse_width_us=int(rng.integers(1, min(max_pw, 5000) + 1)),
        polarity=rng.choice(list(Polarity)),
        duration_ms=duration,
        electrodes=pads,
        channel=rng.choice(list(Channel)),
    )


def test_stim_payload_round_trip_every_field():
    rng = np.random.default_rng(11)
    for _ in range(500):
        params = random_stim(rng)
        back = decode_stim(encode_stim(params))
        assert back == params  # exact, f64 fields included


def test_stim_payload_inconsistent_length_rejected():
    params = StimParams(
        amplitude_ma=1.0, frequency_hz=50.0, pulse_width_us=200,
        polarity=Polarity.ALTERNATING, duration_ms=100.0, electrodes=frozenset({1, 2}),
    )
    payload = encode_stim(params)
    with pytest.raises(ValueError):
        decode_stim(payload[:-1])
    with pytest.raises(ValueError):
        decode_stim(payload + b"\x07")


def test_telemetry_round_trip():
    t = Telemetry(t_us=123456789, measured_ma=(1.25, 0.0), power_draw_ma=130.0,
                  switch_bits=0b1001, load_kohm=42.5)
    assert decode_telemetry(encode_telemetry(t)) == t


def test_percept_round_trip_and_bad_codes():
    p = PerceptWire(t_us=55, location="contact_point", zone="ventral", intensity_score=0.375)
    assert decode_percept(encode_percept(p)) == p
    bad = bytearray(encode_percept(p))
    bad[8] = 250
    with pytest.raises(ValueError):
        decode_percept(bytes(bad))


def test_error_event_round_trip():
    e = ErrorEvent(code=7, detail="skin load out of band: 140 kΩ")
    assert decode_error(encode_error(e)) == e


def test_ack_round_trip():
    assert decode_ack(encode_ack()) is None
    assert decode_ack(encode_ack(99)) == 99
    with pytest.raises(ValueError):
        decode_ack(b"\x01\x02")


def test_app_event_round_trip_and_rejection():
    event = {"kind": "press", "x": 31.5, "y": 16.0, "peak_depth_mm": 2.0}
    assert decode_app_event(encode_app_event(event)) == event
    with pytest.raises(ValueError):
        decode_app_event(b"\xff\xfe")
    with pytest.raises(ValueError):
        decode_app_event(b"[1,2]")


# --- frame chunking -----------------------------------------------------------


def random_frame(rng, w, h, seq=0) -> TactileFrame:
    pixels = rng.random((h, w)).astype(np.float32)
    return TactileFrame(seq=seq, t_us=0, pixels=pixels)


def test_chunking_respects_cap_and_reassembles():
    rng = np.random.default_rng(3)
    frame = random_frame(rng, 256, 256, seq=41)  # 65536 px -> 2 chunks
    chunks = chunk_frame(frame)
    assert len(chunks) == 2
    assert all(len(c.data) <= CHUNK_BYTES for c in chunks)
    asm = FrameAssembler()
    assert asm.feed(chunks[0]) is None
    out = asm.feed(chunks[1], t_us=9)
    assert out is not None
    assert np.array_equal(out.quantized(), frame.quantized())
    assert out.seq == 41 and out.t_us == 9


def test_reassembly_any_order_and_interleaved():
    rng = np.random.default_rng(5)
    f1 = random_frame(rng, 256, 192, seq=1)
    f2 = random_frame(rng, 256, 192, seq=2)
    c1, c2 = chunk_frame(f1), chunk_frame(f2)
    asm = FrameAssembler()
    done = {}
    for chunk in [c1[1], c2[0], c2[1], c1[0]]:
        got = asm.feed(chunk)
        if got is not None:
            done[got.seq] = got
    assert set(done) == {1, 2}
    assert np.array_equal(done[1].quantized(), f1.quantized())
    assert np.array_equal(done[2].quantized(), f2.quantized())


def test_chunk_payload_round_trip():
    c = FrameChunk(frame_seq=9, chunk_index=1, chunk_count=3, width=64, height=64,
                   offset=32768, data=b"\x01\x02\x03")
    assert decode_chunk(encode_chunk(c)) == c


def test_reassembly_size_mismatch_errors():
    c = FrameChunk(frame_seq=1, chunk_index=0, chunk_count=1, width=64, height=64,
                   offset=0, data=b"\0" * 100)
    with pytest.raises(ValueError):
        FrameAssembler().feed(c)


def test_single_chunk_frame_via_wire_messages():
    rng = np.random.default_rng(8)
    frame = random_frame(rng, 64, 64, seq=17)
    chunks = chunk_frame(frame)
    assert len(chunks) == 1
    msg = Message(type=MsgType.FRAME_CHUNK, seq=0, payload=encode_chunk(chunks[0]))
    back = decode(encode(msg))
    out = FrameAssembler().feed(decode_chunk(back.payload))
    assert out is not None and np.array_equal(out.quantized(), frame.quantized())


# --- transports ---------------------------------------------------------------


def test_stream_decoder_handles_arbitrary_chunking():
    rng = np.random.default_rng(13)
    msgs = [random_message(rng) for _ in range(60)]
    blob = b"".join(encode(m) for m in msgs)
    for trial in range(10):
        dec = StreamDecoder()
        got = []
        i = 0
        r = np.random.default_rng(trial)
        while i < len(blob):
            n = int(r.integers(1, 97))
            got.extend(dec.feed(blob[i : i + n]))
            i += n
        assert got == msgs
        assert dec.pending_bytes == 0


def test_in_proc_pair_carries_messages_both_ways():
    a, b = in_proc_pair()
    m1 = Message(type=MsgType.ACK, seq=1)
    m2 = Message(type=MsgType.ACK, seq=2)
    a.send(m1)
    b.send(m2)
    assert b.receive() == [m1]
    assert a.receive() == [m2]
    assert a.receive() == []


def test_gateway_address_env_parsing(monkeypatch):
    monkeypatch.delenv("VET_GATEWAY_ADDR", raising=False)
    assert gateway_address() == ("127.0.0.1", 8077)
    monkeypatch.setenv("VET_GATEWAY_ADDR", "0.0.0.0:9001")
    assert gateway_address() == ("0.0.0.0", 9001)
    monkeypatch.setenv("VET_GATEWAY_ADDR", "nonsense")
    with pytest.raises(ValueError):
        gateway_address()


def free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_tcp_device_round_trip():
    cfg = default_config()
    device = SimulatedDevice(cfg, seed=4)
    port = free_port()
    server = serve_device_tcp(device, port=port)
    try:
        client = connect_device_tcp(port=port)
        params = StimParams(
            amplitude_ma=2.0, frequency_hz=50.0, pulse_width_us=200,
            polarity=Polarity.ALTERNATING, duration_ms=500.0, electrodes=frozenset({5, 6}),
        )
        client.send(Message(type=MsgType.STIM_COMMAND, seq=77, payload=encode_stim(params)))
        seen: dict[MsgType, Message] = {}
        for _ in range(400):
            msg = client.recv()
            assert msg is not None
            seen.setdefault(msg.type, msg)
            if {MsgType.ACK, MsgType.TELEMETRY, MsgType.PERCEPT_EVENT} <= set(seen):
                break
        assert decode_ack(seen[MsgType.ACK].payload) == 77
        tele = decode_telemetry(seen[MsgType.TELEMETRY].payload)
        assert tele.power_draw_ma in (130.0, 250.0)
        client.close()
    finally:
        server.shutdown()
        server.server_close()
