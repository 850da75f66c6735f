"""Session logs: newline-delimited JSON records, written once, replayable.

Every record is one line ``{"t_us": ..., "kind": ..., "payload": ...}``.
The first record is the meta header (version, seed, config digest, the
scenario that was run); the rest mirror wire traffic, ``kind`` "in"
for host->device and "out" for device->host. Replay re-runs the same
scenario from the header and verifies the log byte-for-byte, so a log
is a proof of what the device did.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

from . import __version__
from .config import VetConfig, config_digest, config_from_dict
from .jsonmap import message_to_json
from .protocol import Message
from .scenario import Scenario, ScenarioEvent, run_scenario


class SessionError(ValueError):
    """Log problems; ``index`` is the zero-based record that broke."""

    def __init__(self, detail: str, index: int):
        super().__init__(f"{detail} (record {index})")
        self.index = index


@dataclass(frozen=True)
class SessionRecord:
    t_us: int
    kind: str  # "meta" | "in" | "out"
    payload: dict[str, Any]


def _dump(record: SessionRecord) -> str:
    return json.dumps(
        {"t_us": record.t_us, "kind": record.kind, "payload": record.payload},
        sort_keys=True, separators=(",", ":"),
    )


def meta_record(cfg: VetConfig, seed: int, scenario: Scenario) -> SessionRecord:
    return SessionRecord(t_us=0, kind="meta", payload={
        "version": __version__,
        "seed": seed,
        "config_digest": config_digest(cfg),
        "config": cfg.to_dict(),
        "scenario": {
            "duration_ms": scenario.duration_ms,
            "tick_ms": scenario.tick_ms,
            "overrides": scenario.overrides,
            "events": [{"t_ms": e.t_ms, **e.event} for e in scenario.events],
        },
    })


def record_session(
    cfg: VetConfig, scenario: Scenario, seed: int
) -> list[SessionRecord]:
    """Run the scenario and capture the full message exchange."""
    inbound, outbound = run_scenario(cfg, scenario, seed)
    records = [meta_record(cfg, seed, scenario)]
    # interleaving is reconstructible from seqs; log inbound first, then
    # outbound, each in its own order — replay compares like for like
    records.extend(
        SessionRecord(t_us=0, kind="in", payload=message_to_json(m)) for m in inbound
    )
    records.extend(
        SessionRecord(t_us=_t_of(m), kind="out", payload=message_to_json(m))
        for m in outbound
    )
    return records


def _t_of(msg: Message) -> int:
    obj = message_to_json(msg)
    t = obj.get("t_us")
    return int(t) if isinstance(t, int) else 0


def write_session(path: str | Path, records: Iterable[SessionRecord]) -> None:
    text = "".join(_dump(r) + "\n" for r in records)
    Path(path).write_text(text)


def read_session(path: str | Path) -> list[SessionRecord]:
    raw = Path(path).read_text()
    records: list[SessionRecord] = []
    # a log must end in a newline; a partial last line is a torn write
    lines = raw.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    else:
        raise SessionError("log does not end with a newline (torn write?)",
                           index=max(0, len(lines) - 1))
    for i, line in enumerate(lines):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SessionError(f"record is not valid JSON: {exc.msg}", index=i) from exc
        if not isinstance(obj, dict) or {"t_us", "kind", "payload"} - set(obj):
            raise SessionError("record missing t_us/kind/payload", index=i)
        records.append(SessionRecord(t_us=obj["t_us"], kind=obj["kind"],
                                     payload=obj["payload"]))
    if not records:
        return []
    if records[0].kind != "meta":
        raise SessionError("first record must be the meta header", index=0)
    return records


@dataclass(frozen=True)
class ReplaySummary:
    records: int
    inbound: int
    outbound: int
    matched: bool
    first_mismatch: int | None  # record index


def replay_session(path: str | Path) -> ReplaySummary:
    """Re-run the logged scenario and compare every record."""
    records = read_session(path)
    if not records:
        return ReplaySummary(records=0, inbound=0, outbound=0, matched=True,
                             first_mismatch=None)
    meta = records[0].payload
    if meta.get("version") != __version__:
        raise SessionError(
            f"log version {meta.get('version')!r} does not match {__version__}", index=0
        )
    try:
        cfg = config_from_dict(meta["config"])
        sc = meta["scenario"]
        scenario = Scenario(
            duration_ms=float(sc["duration_ms"]),
            tick_ms=float(sc["tick_ms"]),
            overrides=dict(sc.get("overrides", {})),
            events=tuple(
                ScenarioEvent(t_ms=float(e["t_ms"]),
                              event={k: v for k, v in e.items() if k != "t_ms"})
                for e in sc["events"]
            ),
        )
        seed = int(meta["seed"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SessionError(f"meta header is incomplete: {exc!r}", index=0) from exc
    if meta.get("config_digest") != config_digest(cfg):
        raise SessionError("config digest does not match the embedded config", index=0)
    fresh = record_session(cfg, scenario, seed)
    matched = True
    first = None
    for i in range(max(len(fresh), len(records))):
        if i >= len(fresh) or i >= len(records) or _dump(fresh[i]) != _dump(records[i]):
            matched = False
            first = i
            break
    n_in = sum(1 for r in records if r.kind == "in")
    n_out = sum(1 for r in records if r.kind == "out")
    return ReplaySummary(records=len(records), inbound=n_in, outbound=n_out,
                         matched=matched, first_mismatch=first)
