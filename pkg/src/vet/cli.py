"""Command-line entry point.

Subcommands: simulate, experiment, game, teleop, serve, replay,
export. Every run that writes files also writes manifest.json with the
config digest, seed, version, and output hashes — and nothing else, so
a rerun with the same seed and config is byte-identical. Exit codes:
0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, VetConfig, config_digest, load_config
from .experiment import report_rows, run_zone_experiment, stats_rows
from .flight import generate_world, hazard_feedback, initial_flight, step_flight
from .jsonmap import message_to_json
from .protocol import MsgType
from .scenario import ScenarioError, default_scenario, load_scenario, run_scenario
from .session import SessionError, read_session, record_session, replay_session, write_session
from .teleop import GraspedObject, run_band_following, run_open_loop

DEFAULT_SEED = 1234


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage problems; the contract here is 1."""

    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _build_parser() -> _Parser:
    p = _Parser(prog="vet", description="simulated visual-electro-tactile rig")
    p.add_argument("--version", action="version", version=f"vet {__version__}")
    sub = p.add_subparsers(dest="command", metavar="command")

    def common(sp, out=True):
        sp.add_argument("--config", help="JSON config file merged over defaults")
        sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
        if out:
            sp.add_argument("--out", default="vet-out", help="output directory")

    sp = sub.add_parser("simulate", help="run a press scenario against the device")
    common(sp)
    sp.add_argument("--scenario", help="scenario JSON (timed press events)")

    sp = sub.add_parser("experiment", help="zone-sensitivity contact/rest trials")
    common(sp)

    sp = sub.add_parser("game", help="headless hazard-grid flight run")
    common(sp)
    sp.add_argument("--duration", type=float, default=30.0,
                    help="simulated seconds to fly")

    sp = sub.add_parser("teleop", help="paired-grasp crush comparison")
    common(sp)

    sp = sub.add_parser("serve", help="run the WebSocket gateway")
    common(sp, out=False)
    sp.add_argument("--port", type=int, help="listen port (default from "
                    "VET_GATEWAY_ADDR, else 8077)")
    sp.add_argument("--device", default="inproc",
                    help="device endpoint: inproc or tcp://host:port")

    sp = sub.add_parser("replay", help="verify a session log against a re-run")
    sp.add_argument("session", help="session.ndjson produced by simulate")

    sp = sub.add_parser("export", help="flatten a session log to CSVs")
    sp.add_argument("session", help="session.ndjson produced by simulate")
    sp.add_argument("--out", default="vet-out", help="output directory")
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help/--version exit 0, usage problems exit 1
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    handler = {
        "simulate": _cmd_simulate,
        "experiment": _cmd_experiment,
        "game": _cmd_game,
        "teleop": _cmd_teleop,
        "serve": _cmd_serve,
        "replay": _cmd_replay,
        "export": _cmd_export,
    }[args.command]
    try:
        return handler(args)
    except (ConfigError, ScenarioError, SessionError, OSError, ValueError) as exc:
        print(f"vet {args.command}: {exc}", file=sys.stderr)
        return 2


# --- output helpers -----------------------------------------------------------


def _write_csv(path: Path, rows: list[dict]) -> None:
    if not rows:
        path.write_text("")
        return
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


def _write_manifest(out: Path, command: str, cfg: VetConfig, seed: int,
                    outputs: list[Path]) -> None:
    manifest = {
        "command": command,
        "config_digest": config_digest(cfg),
        "seed": seed,
        "version": __version__,
        "outputs": {
            p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(outputs)
        },
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    )


def _prep(args) -> tuple[VetConfig, Path]:
    cfg = load_config(args.config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, out


# --- subcommands --------------------------------------------------------------


def _cmd_simulate(args) -> int:
    cfg, out = _prep(args)
    scenario = load_scenario(args.scenario) if args.scenario else default_scenario(cfg)
    records = record_session(cfg, scenario, args.seed)
    session = out / "session.ndjson"
    write_session(session, records)
    _write_manifest(out, "simulate", cfg, args.seed, [session])
    frames = sum(1 for r in records
                 if r.kind == "out" and r.payload.get("type") == "frame_chunk")
    print(f"simulate: {len(records)} records ({frames} frame chunks, "
          f"{scenario.duration_ms:g} ms simulated) -> {session}")
    return 0


def _cmd_experiment(args) -> int:
    cfg, out = _prep(args)
    report = run_zone_experiment(cfg, args.seed)
    trials = out / "trials.csv"
    stats = out / "zone_stats.csv"
    _write_csv(trials, report_rows(report))
    _write_csv(stats, stats_rows(report))
    _write_manifest(out, "experiment", cfg, args.seed, [trials, stats])
    order = sorted(
        (s for s in report.stats if s.condition == "stimulated"),
        key=lambda s: -s.median,
    )
    ranking = " > ".join(s.zone.value for s in order)
    print(f"experiment: {len(report.trials)} trials -> {trials}")
    print(f"stimulated median ranking: {ranking}")
    return 0


def _cmd_game(args) -> int:
    cfg, out = _prep(args)
    world = generate_world(cfg, args.seed)
    state = initial_flight(cfg, world)
    dt = cfg.game.tick_ms / 1000.0
    rng = np.random.default_rng([args.seed, 0x6A3E])
    flow = np.zeros(2)
    rows = []
    for _ in range(max(1, round(args.duration / dt))):
        # smooth wandering flow, as if a fingertip were steering
        flow = 0.9 * flow + 0.1 * rng.normal(0.0, 1.5, size=2)
        state = step_flight(state, (float(flow[0]), float(flow[1])), dt, cfg, world,
                            in_contact=True)
        cmd = hazard_feedback(state, cfg)
        rows.append({
            "t_ms": state.t_ms, "x": state.x, "y": state.y,
            "vx": state.vx, "vy": state.vy,
            "zone_under": state.zone_under or "",
            "cargo_collected": state.cargo_collected,
            "collided": int(state.collided),
            "feedback_hz": cmd.frequency_hz if cmd else "",
            "feedback_ma": cmd.amplitude_ma if cmd else "",
        })
    path = out / "game.csv"
    _write_csv(path, rows)
    _write_manifest(out, "game", cfg, args.seed, [path])
    hazard_ticks = sum(1 for r in rows if r["zone_under"])
    print(f"game: {len(rows)} ticks, {state.cargo_collected}/{cfg.game.n_cargo} cargo, "
          f"{hazard_ticks} hazard ticks -> {path}")
    return 0


def _cmd_teleop(args) -> int:
    cfg, out = _prep(args)
    soft = GraspedObject(stiffness=0.5, size_mm=40.0, crush_limit=6.0)
    blind = run_open_loop(cfg, soft, target_aperture_mm=soft.size_mm - 15.0,
                          duration_s=3.0)
    guided = run_band_following(cfg, soft, band_hz=(2.0, 4.0), duration_s=3.0)
    rows = []
    for mode, trace in [("open_loop", blind), ("band_following", guided)]:
        for state, cmd in zip(trace.states, trace.commands):
            rows.append({
                "mode": mode, "t_ms": state.t_ms,
                "aperture_mm": state.aperture_mm, "grip_force": state.grip_force,
                "feedback_hz": cmd.frequency_hz if cmd else "",
                "slip": int(state.slip), "crushed": int(state.crushed),
            })
    path = out / "teleop.csv"
    _write_csv(path, rows)
    _write_manifest(out, "teleop", cfg, args.seed, [path])
    print(f"teleop: open-loop crushed={blind.ever_crushed}, "
          f"band-following crushed={guided.ever_crushed} -> {path}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .gateway import create_gateway
    from .transport import gateway_address

    cfg = load_config(args.config)
    host, port = gateway_address()
    if args.port is not None:
        port = args.port
    app = create_gateway(cfg, seed=args.seed, device_endpoint=args.device)
    print(f"serving gateway on ws://{host}:{port}/ws (schema at /schema)")
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


def _cmd_replay(args) -> int:
    summary = replay_session(args.session)
    if summary.matched:
        print(f"replay: {summary.records} records verified "
              f"({summary.inbound} in, {summary.outbound} out) — match")
        return 0
    print(f"replay: MISMATCH at record {summary.first_mismatch} "
          f"of {summary.records}", file=sys.stderr)
    return 2


def _cmd_export(args) -> int:
    records = read_session(args.session)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    telemetry, percepts, commands = [], [], []
    for r in records:
        if r.kind not in ("in", "out"):
            continue
        obj = r.payload
        if obj.get("type") == "telemetry":
            telemetry.append({
                "t_us": obj["t_us"], "measured_ma_ac1": obj["measured_ma"][0],
                "measured_ma_ac2": obj["measured_ma"][1],
                "power_draw_ma": obj["power_draw_ma"],
                "switch_bits": obj["switch_bits"], "load_kohm": obj["load_kohm"],
            })
        elif obj.get("type") == "percept_event":
            percepts.append({
                "t_us": obj["t_us"], "location": obj["location"],
                "zone": obj["zone"], "intensity_score": obj["intensity_score"],
            })
        elif obj.get("type") == "stim_command":
            commands.append({
                "seq": obj["seq"], "channel": obj["channel"],
                "polarity": obj["polarity"], "amplitude_ma": obj["amplitude_ma"],
                "frequency_hz": obj["frequency_hz"],
                "pulse_width_us": obj["pulse_width_us"],
                "duration_ms": obj["duration_ms"],
                "electrodes": " ".join(str(e) for e in obj["electrodes"]),
            })
    paths = []
    for name, rows in [("telemetry.csv", telemetry), ("percepts.csv", percepts),
                       ("commands.csv", commands)]:
        path = out / name
        _write_csv(path, rows)
        paths.append(path)
    meta = records[0].payload if records else {}
    manifest = {
        "command": "export",
        "config_digest": meta.get("config_digest", ""),
        "seed": meta.get("seed", 0),
        "version": __version__,
        "outputs": {
            p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(paths)
        },
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    )
    print(f"export: {len(telemetry)} telemetry, {len(percepts)} percepts, "
          f"{len(commands)} commands (session version {meta.get('version')}) -> {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
