"""Transports that carry encoded protocol messages.

Two interchangeable carriers: an in-process queue pair (tests, the
gateway's default device) and TCP (remote device). Both move the same
encoded bytes; the stream decoder below turns an arbitrary byte
arrival pattern back into whole messages.
"""

from __future__ import annotations

import os
import socket
import socketserver
import threading
from collections import deque

from .host import SimulatedDevice
from .protocol import Message, Truncated, decode_prefix, encode

DEFAULT_TCP_PORT = 7420
GATEWAY_ADDR_ENV = "VET_GATEWAY_ADDR"


def gateway_address(default_host: str = "127.0.0.1", default_port: int = 8077) -> tuple[str, int]:
    """Listen address for the gateway; VET_GATEWAY_ADDR=host:port overrides."""
    raw = os.environ.get(GATEWAY_ADDR_ENV)
    if not raw:
        return default_host, default_port
    host, sep, port = raw.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"{GATEWAY_ADDR_ENV} must look like host:port, got {raw!r}")
    return (host or default_host), int(port)


class StreamDecoder:
    """Incremental decoder: feed bytes in any chunking, take out messages."""

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[Message]:
        self._buf.extend(data)
        out: list[Message] = []
        while self._buf:
            try:
                msg, consumed = decode_prefix(bytes(self._buf))
            except Truncated:
                break  # wait for the rest
            del self._buf[:consumed]
            out.append(msg)
        return out

    @property
    def pending_bytes(self) -> int:
        return len(self._buf)


class InProcEndpoint:
    """One side of an in-process link."""

    def __init__(self, inbox: deque, outbox: deque):
        self._inbox = inbox
        self._outbox = outbox

    def send(self, msg: Message) -> None:
        self._outbox.append(msg)

    def receive(self) -> list[Message]:
        out = []
        while self._inbox:
            out.append(self._inbox.popleft())
        return out


def in_proc_pair() -> tuple[InProcEndpoint, InProcEndpoint]:
    a_to_b: deque = deque()
    b_to_a: deque = deque()
    return InProcEndpoint(b_to_a, a_to_b), InProcEndpoint(a_to_b, b_to_a)


class MessageSocket:
    """Blocking whole-message I/O over a connected socket."""

    def __init__(self, sock: socket.socket):
        self.sock = sock
        self._decoder = StreamDecoder()
        self._pending: deque = deque()

    def send(self, msg: Message) -> None:
        self.sock.sendall(encode(msg))

    def recv(self) -> Message | None:
        """One message, blocking; None on clean EOF."""
        while not self._pending:
            chunk = self.sock.recv(65536)
            if not chunk:
                return None
            self._pending.extend(self._decoder.feed(chunk))
        return self._pending.popleft()

    def close(self) -> None:
        self.sock.close()


def connect_device_tcp(host: str = "127.0.0.1", port: int = DEFAULT_TCP_PORT) -> MessageSocket:
    return MessageSocket(socket.create_connection((host, port)))


class _DeviceHandler(socketserver.BaseRequestHandler):
    def handle(self) -> None:
        server: DeviceTcpServer = self.server  # type: ignore[assignment]
        decoder = StreamDecoder()
        self.request.settimeout(server.tick_s)
        while not server.closing.is_set():
            try:
                chunk = self.request.recv(65536)
                if not chunk:
                    return
                inbound = decoder.feed(chunk)
            except socket.timeout:
                inbound = []
            except OSError:
                return
            with server.device_lock:
                replies = [r for msg in inbound for r in server.device.handle(msg)]
                replies.extend(server.device.tick(server.tick_s * 1000.0))
            try:
                for msg in replies:
                    self.request.sendall(encode(msg))
            except OSError:
                return


class DeviceTcpServer(socketserver.ThreadingTCPServer):
    """Serves one SimulatedDevice over TCP; the clock advances while a client
    is connected (one tick per poll interval)."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, device: SimulatedDevice, host: str = "127.0.0.1",
                 port: int = DEFAULT_TCP_PORT, tick_ms: float = 10.0):
        super().__init__((host, port), _DeviceHandler)
        self.device = device
        self.device_lock = threading.Lock()
        self.tick_s = tick_ms / 1000.0
        self.closing = threading.Event()

    def shutdown(self) -> None:  # type: ignore[override]
        self.closing.set()
        super().shutdown()


def serve_device_tcp(
    device: SimulatedDevice, host: str = "127.0.0.1", port: int = DEFAULT_TCP_PORT
) -> DeviceTcpServer:
    """Start serving in a background thread; caller owns shutdown()."""
    server = DeviceTcpServer(device, host, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server
