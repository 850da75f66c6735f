"""Flight game engine: steer a craft over a hazard grid by touch.

Mean optical flow from the fingertip maps to acceleration; the world
is a seeded grid of ice and fire cells with cargo pickups. Hazards map
to pulse trains — slippery ice reads as slow weak buzzing, fire as a
fast strong warning, wall hits as a short hard jolt, and plain
sustained contact as a rhythmic tick. Everything is a pure step
function of (state, input, dt).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .config import VetConfig
from .stim import DEFAULT_FEEDBACK_ELECTRODES, Polarity, StimParams
from .tactile import FlowField

# amplitude tiers (mA): the two hazard levels plus collision jolt and
# the idle-contact rhythm. All well inside the safety clamp.
ICE_AMPLITUDE_MA = 1.0
FIRE_AMPLITUDE_MA = 3.0
COLLISION_AMPLITUDE_MA = 4.0
CONTACT_AMPLITUDE_MA = 1.5
ICE_FREQUENCY_HZ = 10.0
FIRE_FREQUENCY_HZ = 50.0
COLLISION_FREQUENCY_HZ = 50.0
CONTACT_FREQUENCY_HZ = 50.0
COLLISION_DURATION_MS = 80.0
FEEDBACK_DURATION_MS = 100.0


@dataclass(frozen=True)
class FlightWorld:
    width: float
    height: float
    cell: float
    ice: frozenset[tuple[int, int]]
    fire: frozenset[tuple[int, int]]
    cargo: frozenset[tuple[int, int]]

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        return (int(x // self.cell), int(y // self.cell))


def generate_world(cfg: VetConfig, seed: int) -> FlightWorld:
    """Seeded hazard/cargo placement on the grid; cells never overlap."""
    g = cfg.game
    nx, ny = int(g.world_w / g.cell), int(g.world_h / g.cell)
    cells = [(i, j) for j in range(ny) for i in range(nx)]
    center = (nx // 2, ny // 2)
    cells.remove(center)  # spawn cell stays clear
    rng = np.random.default_rng([seed, 0xF11])
    need = g.n_ice + g.n_fire + g.n_cargo
    if need > len(cells):
        raise ValueError(f"world too small for {need} special cells")
    picks = rng.choice(len(cells), size=need, replace=False)
    chosen = [cells[int(i)] for i in picks]
    ice = frozenset(chosen[: g.n_ice])
    fire = frozenset(chosen[g.n_ice : g.n_ice + g.n_fire])
    cargo = frozenset(chosen[g.n_ice + g.n_fire :])
    return FlightWorld(width=g.world_w, height=g.world_h, cell=g.cell,
                       ice=ice, fire=fire, cargo=cargo)


@dataclass(frozen=True)
class FlightState:
    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0
    zone_under: str | None = None  # "ice" | "fire" | None
    cargo_collected: int = 0
    collected_cells: frozenset[tuple[int, int]] = frozenset()
    collided: bool = False  # wall hit this tick
    in_contact: bool = False
    contact_ms: float = 0.0
    t_ms: float = 0.0

    @property
    def speed(self) -> float:
        return math.hypot(self.vx, self.vy)


def initial_flight(cfg: VetConfig, world: FlightWorld) -> FlightState:
    return FlightState(x=world.width / 2.0, y=world.height / 2.0)


def _mean_flow(flow: "FlowField | tuple[float, float] | None") -> tuple[float, float]:
    if flow is None:
        return (0.0, 0.0)
    if isinstance(flow, FlowField):
        return flow.mean_flow
    return (float(flow[0]), float(flow[1]))


def step_flight(
    state: FlightState,
    flow: "FlowField | tuple[float, float] | None",
    dt_s: float,
    cfg: VetConfig,
    world: FlightWorld,
    in_contact: bool = False,
) -> FlightState:
    """One tick of craft kinematics: flow drives acceleration, drag bleeds
    speed, walls stop (and flag) the craft, hazards and cargo come from the
    cell underneath."""
    if dt_s <= 0:
        raise ValueError("flight step must advance time")
    g = cfg.game
    fx, fy = _mean_flow(flow)
    vx = state.vx + g.flow_gain * fx * dt_s
    vy = state.vy + g.flow_gain * fy * dt_s
    damp = max(0.0, 1.0 - g.drag_per_s * dt_s)
    vx *= damp
    vy *= damp
    speed = math.hypot(vx, vy)
    if speed > g.v_max:
        vx *= g.v_max / speed
        vy *= g.v_max / speed
    x = state.x + vx * dt_s
    y = state.y + vy * dt_s
    collided = False
    eps = 1e-9
    if x < 0.0 or x > world.width:
        x = min(max(x, 0.0), world.width)
        vx = 0.0
        collided = True
    if y < 0.0 or y > world.height:
        y = min(max(y, 0.0), world.height)
        vy = 0.0
        collided = True
    cell = world.cell_of(min(x, world.width - eps), min(y, world.height - eps))
    zone = "ice" if cell in world.ice else "fire" if cell in world.fire else None
    collected_cells = state.collected_cells
    cargo_collected = state.cargo_collected
    if cell in world.cargo and cell not in collected_cells:
        collected_cells = collected_cells | {cell}
        cargo_collected += 1
    contact_ms = state.contact_ms + dt_s * 1000.0 if in_contact else 0.0
    return FlightState(
        x=x, y=y, vx=vx, vy=vy, zone_under=zone,
        cargo_collected=cargo_collected, collected_cells=collected_cells,
        collided=collided, in_contact=in_contact, contact_ms=contact_ms,
        t_ms=state.t_ms + dt_s * 1000.0,
    )


def _feedback(amplitude_ma: float, frequency_hz: float, duration_ms: float,
              cfg: VetConfig) -> StimParams:
    return StimParams(
        amplitude_ma=amplitude_ma,
        frequency_hz=frequency_hz,
        pulse_width_us=cfg.stim.pulse_width_us,
        polarity=Polarity.ALTERNATING,
        duration_ms=duration_ms,
        electrodes=DEFAULT_FEEDBACK_ELECTRODES,
    )


def hazard_feedback(state: FlightState, cfg: VetConfig) -> StimParams | None:
    """Map the craft's situation to a pulse train, most urgent first:
    wall jolt, then fire warning, then ice buzz, then the sustained-contact
    rhythm (on for burst_on_ms out of every burst_period_ms)."""
    if state.collided:
        return _feedback(COLLISION_AMPLITUDE_MA, COLLISION_FREQUENCY_HZ,
                         COLLISION_DURATION_MS, cfg)
    if state.zone_under == "fire":
        return _feedback(FIRE_AMPLITUDE_MA, FIRE_FREQUENCY_HZ, FEEDBACK_DURATION_MS, cfg)
    if state.zone_under == "ice":
        return _feedback(ICE_AMPLITUDE_MA, ICE_FREQUENCY_HZ, FEEDBACK_DURATION_MS, cfg)
    if state.in_contact and state.contact_ms > 0.0:
        phase = math.fmod(state.contact_ms, cfg.game.burst_period_ms)
        if phase < cfg.game.burst_on_ms:
            return _feedback(CONTACT_AMPLITUDE_MA, CONTACT_FREQUENCY_HZ,
                             cfg.game.burst_on_ms, cfg)
    return None


def run_scripted_flight(
    cfg: VetConfig,
    world: FlightWorld,
    flows: Iterable[tuple[float, float]],
    dt_s: float,
    in_contact: bool = True,
) -> tuple[FlightState, list[StimParams | None]]:
    """Drive the craft along a scripted flow sequence; returns the final
    state and the per-tick feedback commands (None where silent)."""
    state = initial_flight(cfg, world)
    commands: list[StimParams | None] = []
    for flow in flows:
        state = step_flight(state, flow, dt_s, cfg, world, in_contact=in_contact)
        commands.append(hazard_feedback(state, cfg))
    return state, commands
