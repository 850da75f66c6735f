"""Tick-driven simulated device speaking the wire protocol.

The device owns the simulation clock for everything on the "hardware"
side: membrane rendering, skin-load walk, current regulation, power
draw. It consumes Messages (stim commands, app events carrying presses)
and emits Messages (frame chunks, telemetry, acks, percepts, errors).
All randomness is keyed on the construction seed, so a fixed seed and
command sequence reproduces the byte stream exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import protocol
from .config import VetConfig
from .device import (
    PerceptEstimate,
    PressEvent,
    initial_load,
    initial_power,
    perceive,
    render_frame,
    step_load,
    step_power,
)
from .protocol import Message, MsgType, Telemetry
from .stim import (
    Channel,
    Grounding,
    RegulatorState,
    StimParams,
    array_for_electrodes,
    clamp_safety,
    default_layout,
    open_array,
    regulate,
)
from .tactile import ReferenceModel, default_calibration, detect_contact
from .zones import FingerZone, zone_of

PERCEPT_INTERVAL_MS = 250.0

# Error payload codes
ERR_BAD_PAYLOAD = 1
ERR_UNEXPECTED_TYPE = 2
ERR_DEVICE_GONE = 3


@dataclass(frozen=True)
class ChannelRun:
    """One output channel's active pulse train, if any."""

    params: StimParams | None = None
    regulator: RegulatorState | None = None
    remaining_ms: float = 0.0
    since_percept_ms: float = 0.0

    @property
    def active(self) -> bool:
        return self.params is not None

    @property
    def commanded_ma(self) -> float:
        if self.params is None or self.regulator is None:
            return 0.0
        return self.regulator.drive_gain * self.regulator.setpoint_ma


class SimulatedDevice:
    """Everything past the wire: membrane, electrodes, regulator, power."""

    def __init__(self, cfg: VetConfig, seed: int = 0):
        layout = default_layout(cfg)
        if layout.count > 16:
            raise ValueError("telemetry packs at most 16 electrode states")
        self.cfg = cfg
        self.seed = seed
        self.layout = layout
        self.grounding = Grounding(cfg.stim.grounding)
        self.t_us = 0
        self.out_seq = 0
        self.frame_seq = 0
        self.presses: list[PressEvent] = []
        self.load = initial_load(cfg)
        self.power = initial_power(cfg)
        self.switches = open_array(layout, self.grounding)
        self.channels: dict[Channel, ChannelRun] = {
            Channel.AC1: ChannelRun(),
            Channel.AC2: ChannelRun(),
        }
        self.measured_ma: dict[Channel, float] = {Channel.AC1: 0.0, Channel.AC2: 0.0}
        self.reference = ReferenceModel(
            baseline=np.full((cfg.sensor.height, cfg.sensor.width), cfg.sensor.baseline),
            noise_sigma=cfg.membrane.noise_sigma,
            calib=default_calibration(cfg),
        )
        self.last_patch = None
        self._frame_accum_us = 0.0

    # -- inbound ---------------------------------------------------------------

    def handle(self, msg: Message) -> list[Message]:
        if msg.type is MsgType.STIM_COMMAND:
            return self._handle_stim(msg)
        if msg.type is MsgType.APP_EVENT:
            return self._handle_app_event(msg)
        return [self._error(ERR_UNEXPECTED_TYPE, f"device cannot accept {msg.type.name}")]

    def _handle_stim(self, msg: Message) -> list[Message]:
        try:
            params = protocol.decode_stim(msg.payload)
            safe, _ = clamp_safety(params, self.cfg)
            if safe.electrodes and max(safe.electrodes) >= self.layout.count:
                raise ValueError("electrode id outside the layout")
        except ValueError as exc:
            return [self._error(ERR_BAD_PAYLOAD, f"stim command rejected: {exc}")]
        out: list[Message] = [self._emit(MsgType.ACK, protocol.encode_ack(msg.seq))]
        if safe.amplitude_ma <= 0.0 or safe.duration_ms <= 0.0 or not safe.electrodes:
            self.channels[safe.channel] = ChannelRun()
            self.measured_ma[safe.channel] = 0.0
        else:
            self.channels[safe.channel] = ChannelRun(
                params=safe,
                regulator=RegulatorState(setpoint_ma=safe.amplitude_ma),
                remaining_ms=safe.duration_ms,
                since_percept_ms=0.0,
            )
            out.append(self._percept_event(safe))
        self._refresh_switches()
        return out

    def _handle_app_event(self, msg: Message) -> list[Message]:
        try:
            event = protocol.decode_app_event(msg.payload)
            kind = event.get("kind")
            if kind == "press":
                self.presses = [self._press_from(event)]
            elif kind == "presses":
                self.presses = [self._press_from(e) for e in event["items"]]
            elif kind == "release":
                self.presses = []
            else:
                return []  # app-level chatter is not for the device
        except (KeyError, TypeError, ValueError) as exc:
            return [self._error(ERR_BAD_PAYLOAD, f"app event rejected: {exc}")]
        return []

    def _press_from(self, event: dict) -> PressEvent:
        press = PressEvent(
            x=float(event["x"]),
            y=float(event["y"]),
            radius_px=float(event.get("radius_px", 6.0)),
            peak_depth_mm=float(event["peak_depth_mm"]),
            vx_px=float(event.get("vx_px", 0.0)),
            vy_px=float(event.get("vy_px", 0.0)),
        )
        w, h = self.cfg.sensor.width, self.cfg.sensor.height
        if not (0 <= press.x < w and 0 <= press.y < h):
            raise ValueError(f"press at ({press.x}, {press.y}) is outside {w}x{h}")
        return press

    # -- clock -----------------------------------------------------------------

    def tick(self, dt_ms: float) -> list[Message]:
        if dt_ms <= 0:
            raise ValueError("tick must advance time")
        self.t_us += int(round(dt_ms * 1000.0))
        out: list[Message] = []

        stimulating = any(run.active for run in self.channels.values())
        self.power = step_power(self.power, dt_ms, self.cfg, stimulating=stimulating)

        total_drive = sum(run.commanded_ma for run in self.channels.values())
        self.load, measured_total = step_load(
            self.load, total_drive, dt_ms, self.cfg, seed=self.seed + 1
        )
        for channel, run in self.channels.items():
            if not run.active:
                self.measured_ma[channel] = 0.0
                continue
            share = run.commanded_ma / total_drive if total_drive > 0 else 0.0
            measured = measured_total * share
            self.measured_ma[channel] = measured
            regulator, _ = regulate(run.regulator, measured, dt_ms, self.cfg)
            run = replace(
                run,
                regulator=regulator,
                remaining_ms=run.remaining_ms - dt_ms,
                since_percept_ms=run.since_percept_ms + dt_ms,
            )
            if run.remaining_ms <= 0:
                run = ChannelRun()
                self.measured_ma[channel] = 0.0
            elif run.since_percept_ms >= PERCEPT_INTERVAL_MS:
                run = replace(run, since_percept_ms=0.0)
                out.append(self._percept_event(run.params))
            self.channels[channel] = run
        self._refresh_switches()

        self._frame_accum_us += dt_ms * 1000.0
        period_us = 1_000_000.0 / self.cfg.sensor.frame_hz
        while self._frame_accum_us >= period_us:
            self._frame_accum_us -= period_us
            out.extend(self._emit_frame())

        out.append(self._telemetry())
        return out

    # -- outbound --------------------------------------------------------------

    def _emit(self, mtype: MsgType, payload: bytes) -> Message:
        msg = Message(type=mtype, seq=self.out_seq, payload=payload)
        self.out_seq += 1
        return msg

    def _error(self, code: int, detail: str) -> Message:
        return self._emit(
            MsgType.ERROR, protocol.encode_error(protocol.ErrorEvent(code=code, detail=detail))
        )

    def _telemetry(self) -> Message:
        t = Telemetry(
            t_us=self.t_us,
            measured_ma=(self.measured_ma[Channel.AC1], self.measured_ma[Channel.AC2]),
            power_draw_ma=self.power.draw_ma,
            switch_bits=self.switches.packed_bits(),
            load_kohm=self.load.r_kohm,
        )
        return self._emit(MsgType.TELEMETRY, protocol.encode_telemetry(t))

    def _emit_frame(self) -> list[Message]:
        frame = render_frame(
            self.cfg, self.presses, seq=self.frame_seq, t_us=self.t_us, noise_seed=self.seed
        )
        self.frame_seq += 1
        self.last_patch = detect_contact(frame, self.reference, self.cfg)
        self.presses = [p.advanced(1.0) for p in self.presses]
        return [
            self._emit(MsgType.FRAME_CHUNK, protocol.encode_chunk(c))
            for c in protocol.chunk_frame(frame)
        ]

    def _refresh_switches(self) -> None:
        active = frozenset().union(
            *(run.params.electrodes for run in self.channels.values() if run.active)
        ) if any(run.active for run in self.channels.values()) else frozenset()
        self.switches = array_for_electrodes(active, self.layout, self.grounding)

    def _percept_event(self, params: StimParams) -> Message:
        estimate = self._perceive(params)
        wire = protocol.PerceptWire(
            t_us=self.t_us,
            location=estimate.location.value,
            zone=estimate.zone.value,
            intensity_score=estimate.intensity_score,
        )
        return self._emit(MsgType.PERCEPT_EVENT, protocol.encode_percept(wire))

    def _perceive(self, params: StimParams) -> PerceptEstimate:
        w, h = self.cfg.sensor.width, self.cfg.sensor.height
        if self.presses:
            zone = zone_of(w, h, self.presses[-1].x, self.presses[-1].y)
        elif self.last_patch is not None:
            zone = zone_of(w, h, *self.last_patch.centroid)
        elif params.electrodes:
            ex, ey = self.layout.cell_center(min(params.electrodes))
            zone = zone_of(w, h, ex, ey)
        else:
            zone = FingerZone.FINGERTIP
        return perceive(self.switches, params, zone)
