"""Scenario files: timed press schedules for headless simulation runs.

A scenario is JSON: optional config overrides (merged over the active
config) plus a list of timed events, each either a press set or a
release. Running one against the simulated device yields the exact
same message stream for the same seed — the determinism contract the
replay machinery depends on.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .config import VetConfig, config_from_dict
from .host import SimulatedDevice
from .protocol import Message, MsgType, encode_app_event


@dataclass(frozen=True)
class ScenarioEvent:
    t_ms: float
    event: dict[str, Any]  # app-event payload: press / presses / release


@dataclass(frozen=True)
class Scenario:
    duration_ms: float
    events: tuple[ScenarioEvent, ...]
    tick_ms: float = 10.0
    overrides: dict = field(default_factory=dict)


class ScenarioError(ValueError):
    pass


def default_scenario(cfg: VetConfig) -> Scenario:
    """A press-and-slide pass over the sensor middle, then release."""
    cx, cy = cfg.sensor.width / 2.0, cfg.sensor.height / 2.0
    return Scenario(
        duration_ms=1000.0,
        tick_ms=10.0,
        events=(
            ScenarioEvent(t_ms=0.0, event={
                "kind": "press", "x": cx - 8.0, "y": cy, "radius_px": 6.0,
                "peak_depth_mm": 1.5, "vx_px": 0.3, "vy_px": 0.0,
            }),
            ScenarioEvent(t_ms=700.0, event={"kind": "release"}),
        ),
    )


def load_scenario(path: str | Path) -> Scenario:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError("scenario must be a JSON object")
    unknown = set(raw) - {"duration_ms", "tick_ms", "events", "overrides"}
    if unknown:
        raise ScenarioError(f"unknown scenario keys: {sorted(unknown)}")
    try:
        events = tuple(
            ScenarioEvent(t_ms=float(e["t_ms"]),
                          event={k: v for k, v in e.items() if k != "t_ms"})
            for e in raw.get("events", [])
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"bad scenario event: {exc!r}") from exc
    duration = float(raw.get("duration_ms", 1000.0))
    tick = float(raw.get("tick_ms", 10.0))
    if duration <= 0 or tick <= 0:
        raise ScenarioError("duration_ms and tick_ms must be positive")
    if any(e.t_ms < 0 or e.t_ms > duration for e in events):
        raise ScenarioError("event times must lie within the scenario duration")
    overrides = raw.get("overrides", {})
    if not isinstance(overrides, dict):
        raise ScenarioError("overrides must be a JSON object")
    return Scenario(duration_ms=duration, tick_ms=tick,
                    events=tuple(sorted(events, key=lambda e: e.t_ms)),
                    overrides=overrides)


def apply_overrides(cfg: VetConfig, scenario: Scenario) -> VetConfig:
    if not scenario.overrides:
        return cfg
    merged = cfg.to_dict()
    for section, values in scenario.overrides.items():
        if section not in merged or not isinstance(values, dict):
            raise ScenarioError(f"override section {section!r} is not a config section")
        merged[section].update(values)
    return config_from_dict(merged)


def run_scenario(
    cfg: VetConfig, scenario: Scenario, seed: int
) -> tuple[list[Message], list[Message]]:
    """Drive a fresh device through the schedule.

    Returns (inbound, outbound): the app-event messages fed in and every
    message the device emitted, in order.
    """
    cfg = apply_overrides(cfg, scenario)
    device = SimulatedDevice(cfg, seed=seed)
    inbound: list[Message] = []
    outbound: list[Message] = []
    queue = list(scenario.events)
    n_ticks = max(1, round(scenario.duration_ms / scenario.tick_ms))
    in_seq = 0
    for tick in range(n_ticks):
        now_ms = tick * scenario.tick_ms
        while queue and queue[0].t_ms <= now_ms:
            event = queue.pop(0)
            msg = Message(type=MsgType.APP_EVENT, seq=in_seq,
                          payload=encode_app_event(event.event))
            in_seq += 1
            inbound.append(msg)
            outbound.extend(device.handle(msg))
        outbound.extend(device.tick(scenario.tick_ms))
    return inbound, outbound
