"""JSON-over-WebSocket gateway bridging UI clients to the device.

One service, two endpoints: /ws carries the JSON mirror of the wire
protocol both ways, /schema documents it. The gateway owns the
simulation clock for an in-process device (the default) or bridges to
a remote device over TCP. Everything crossing the wire is broadcast to
every connected client — device traffic and accepted commands alike, in
wire order — so a passive client can scope or record the whole exchange;
commands are applied in arrival order; a client sending malformed JSON
gets an error reply on its own socket and nobody else hears about it.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import queue as queue_mod
import threading
from typing import Any

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .config import VetConfig, default_config
from .host import ERR_BAD_PAYLOAD, ERR_DEVICE_GONE, SimulatedDevice
from .jsonmap import SCHEMA, message_from_json, message_to_json
from .protocol import Message, MsgType
from .transport import MessageSocket, connect_device_tcp

GATEWAY_TICK_MS = 10.0
CLIENT_QUEUE_LIMIT = 2048
_INBOUND_TYPES = (MsgType.STIM_COMMAND, MsgType.APP_EVENT)


class InProcDeviceLink:
    """Device embedded in the gateway process; the gateway drives its clock."""

    def __init__(self, cfg: VetConfig, seed: int):
        self.device = SimulatedDevice(cfg, seed=seed)

    def submit(self, msg: Message) -> list[Message]:
        return self.device.handle(msg)

    def pump(self, dt_ms: float) -> list[Message]:
        return self.device.tick(dt_ms)

    def close(self) -> None:
        pass


class TcpDeviceLink:
    """Remote device over TCP; its server drives the clock, we relay."""

    def __init__(self, host: str, port: int):
        self.host, self.port = host, port
        self._sock: MessageSocket | None = None
        self._rx: queue_mod.Queue = queue_mod.Queue()
        self._lost = threading.Event()
        self._reported_lost = False
        self._connect()

    def _connect(self) -> None:
        self._sock = connect_device_tcp(self.host, self.port)
        self._lost.clear()
        thread = threading.Thread(target=self._reader, args=(self._sock,), daemon=True)
        thread.start()

    def _reader(self, sock: MessageSocket) -> None:
        try:
            while True:
                msg = sock.recv()
                if msg is None:
                    break
                self._rx.put(msg)
        except OSError:
            pass
        self._lost.set()

    def submit(self, msg: Message) -> list[Message]:
        if self._sock is None or self._lost.is_set():
            raise ConnectionError("device link is down")
        self._sock.send(msg)
        return []  # replies arrive on the read thread

    def pump(self, dt_ms: float) -> list[Message]:
        out: list[Message] = []
        if self._lost.is_set():
            if not self._reported_lost:
                self._reported_lost = True
                out.append(_gateway_error(ERR_DEVICE_GONE, "device disconnected"))
            with contextlib.suppress(OSError, ConnectionError):
                self._connect()
                self._reported_lost = False
        while True:
            try:
                out.append(self._rx.get_nowait())
            except queue_mod.Empty:
                break
        return out

    def close(self) -> None:
        if self._sock is not None:
            with contextlib.suppress(OSError):
                self._sock.close()


def _gateway_error(code: int, detail: str) -> Message:
    from .protocol import ErrorEvent, encode_error

    return Message(type=MsgType.ERROR, seq=0, payload=encode_error(ErrorEvent(code, detail)))


def _parse_endpoint(endpoint: str) -> tuple[str, str, int]:
    if endpoint == "inproc":
        return ("inproc", "", 0)
    if endpoint.startswith("tcp://"):
        rest = endpoint[len("tcp://"):]
        host, sep, port = rest.rpartition(":")
        if not sep or not port.isdigit():
            raise ValueError(f"tcp endpoint must be tcp://host:port, got {endpoint!r}")
        return ("tcp", host, int(port))
    raise ValueError(f"unknown device endpoint {endpoint!r}")


def create_gateway(
    cfg: VetConfig | None = None,
    seed: int = 0,
    device_endpoint: str = "inproc",
    tick_ms: float = GATEWAY_TICK_MS,
) -> FastAPI:
    cfg = cfg if cfg is not None else default_config()
    kind, host, port = _parse_endpoint(device_endpoint)

    clients: dict[int, asyncio.Queue] = {}
    device_lock = asyncio.Lock()
    link_holder: dict[str, Any] = {}

    def broadcast(objs: list[dict]) -> None:
        for q in clients.values():
            for obj in objs:
                if q.full():
                    with contextlib.suppress(asyncio.QueueEmpty):
                        q.get_nowait()  # drop oldest, stay live
                q.put_nowait(obj)

    async def pump_loop() -> None:
        link = link_holder["link"]
        while True:
            await asyncio.sleep(tick_ms / 1000.0)
            async with device_lock:
                msgs = link.pump(tick_ms)
            if clients and msgs:
                broadcast([message_to_json(m) for m in msgs])

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        link_holder["link"] = (
            InProcDeviceLink(cfg, seed) if kind == "inproc" else TcpDeviceLink(host, port)
        )
        task = asyncio.create_task(pump_loop())
        try:
            yield
        finally:
            task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await task
            link_holder["link"].close()

    app = FastAPI(title="vet gateway", lifespan=lifespan)

    @app.get("/schema")
    def schema() -> dict:
        return {
            "websocket": "/ws",
            "inbound_types": [t.name.lower() for t in _INBOUND_TYPES],
            "echo": "accepted inbound messages are broadcast to every client "
                    "before their replies",
            **SCHEMA,
        }

    @app.websocket("/ws")
    async def ws(sock: WebSocket) -> None:
        await sock.accept()
        q: asyncio.Queue = asyncio.Queue(maxsize=CLIENT_QUEUE_LIMIT)
        key = id(sock)
        clients[key] = q

        async def sender() -> None:
            while True:
                obj = await q.get()
                await sock.send_json(obj)

        send_task = asyncio.create_task(sender())
        link = link_holder["link"]
        try:
            while True:
                text = await sock.receive_text()
                try:
                    raw = json.loads(text)
                    msg = message_from_json(raw)
                    if msg.type not in _INBOUND_TYPES:
                        raise ValueError(
                            f"clients may send only "
                            f"{[t.name.lower() for t in _INBOUND_TYPES]}"
                        )
                except (ValueError, json.JSONDecodeError) as exc:
                    # private reply; other clients never see this
                    await sock.send_json(message_to_json(
                        _gateway_error(ERR_BAD_PAYLOAD, str(exc))
                    ))
                    continue
                try:
                    async with device_lock:
                        replies = link.submit(msg)
                        # echo the accepted command, then its replies, so every
                        # client sees the wire in order (scopes, recorders)
                        broadcast([message_to_json(msg)]
                                  + [message_to_json(m) for m in replies])
                except ConnectionError as exc:
                    await sock.send_json(message_to_json(
                        _gateway_error(ERR_DEVICE_GONE, str(exc))
                    ))
                    continue
        except WebSocketDisconnect:
            pass
        finally:
            clients.pop(key, None)
            send_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await send_task

    return app
