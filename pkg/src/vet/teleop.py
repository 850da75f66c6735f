"""Teleoperated grasping harness with frequency-coded grip feedback.

The operator commands a gripper aperture; the jaw slews at a fixed
rate, a linear-spring object pushes back, and the grip force maps to a
stimulation frequency so harder contact reads as a faster train. Two
scripted operators — one chasing a frequency band, one running open
loop to a fixed aperture — provide the crush-avoidance comparison.
"""

from __future__ import annotations

from dataclasses import dataclass

from .config import VetConfig
from .stim import DEFAULT_FEEDBACK_ELECTRODES, Polarity, StimParams

FEEDBACK_AMPLITUDE_MA = 2.0
FEEDBACK_DURATION_MS = 100.0


@dataclass(frozen=True)
class GraspedObject:
    stiffness: float  # force units per mm of squeeze
    size_mm: float
    crush_limit: float  # force beyond which the object is destroyed

    def __post_init__(self) -> None:
        if self.stiffness <= 0 or self.size_mm <= 0 or self.crush_limit <= 0:
            raise ValueError("object parameters must be positive")


@dataclass(frozen=True)
class TeleopState:
    aperture_mm: float
    grip_force: float = 0.0
    slip: bool = False
    crushed: bool = False  # latches
    t_ms: float = 0.0


def initial_teleop(cfg: VetConfig) -> TeleopState:
    return TeleopState(aperture_mm=cfg.teleop.aperture_open_mm)


def grip_force_of(obj: GraspedObject, aperture_mm: float) -> float:
    return obj.stiffness * max(0.0, obj.size_mm - aperture_mm)


def feedback_frequency(grip_force: float, obj: GraspedObject, cfg: VetConfig) -> float:
    """Grip force -> stimulation frequency, harder contact reads faster."""
    t = cfg.teleop
    gf_norm = grip_force / t.grip_force_ref
    k_norm = obj.stiffness / t.stiffness_ref
    f = 0.5 + t.freq_gain * gf_norm * k_norm
    return min(max(f, cfg.stim.min_frequency_hz), cfg.stim.max_frequency_hz)


def step_teleop(
    state: TeleopState,
    aperture_command_mm: float,
    dt_s: float,
    cfg: VetConfig,
    obj: GraspedObject,
    lifting: bool = False,
) -> tuple[TeleopState, StimParams | None]:
    if dt_s <= 0:
        raise ValueError("teleop step must advance time")
    t = cfg.teleop
    target = min(max(aperture_command_mm, t.aperture_min_mm), t.aperture_open_mm)
    max_move = t.slew_mm_s * dt_s
    delta = min(max(target - state.aperture_mm, -max_move), max_move)
    aperture = state.aperture_mm + delta
    grip = grip_force_of(obj, aperture)
    crushed = state.crushed or grip > obj.crush_limit
    slip = lifting and grip < t.slip_threshold
    new = TeleopState(
        aperture_mm=aperture, grip_force=grip, slip=slip,
        crushed=crushed, t_ms=state.t_ms + dt_s * 1000.0,
    )
    if grip <= 0.0:
        return new, None
    params = StimParams(
        amplitude_ma=FEEDBACK_AMPLITUDE_MA,
        frequency_hz=feedback_frequency(grip, obj, cfg),
        pulse_width_us=cfg.stim.pulse_width_us,
        polarity=Polarity.ALTERNATING,
        duration_ms=FEEDBACK_DURATION_MS,
        electrodes=DEFAULT_FEEDBACK_ELECTRODES,
    )
    return new, params


@dataclass(frozen=True)
class TeleopTrace:
    states: tuple[TeleopState, ...]
    commands: tuple["StimParams | None", ...]

    @property
    def final(self) -> TeleopState:
        return self.states[-1]

    @property
    def ever_crushed(self) -> bool:
        return self.final.crushed


def run_open_loop(
    cfg: VetConfig, obj: GraspedObject, target_aperture_mm: float, duration_s: float
) -> TeleopTrace:
    """Blind operator: drives straight to a fixed aperture and holds."""
    dt = cfg.teleop.tick_ms / 1000.0
    state = initial_teleop(cfg)
    states, commands = [], []
    for _ in range(max(1, round(duration_s / dt))):
        state, cmd = step_teleop(state, target_aperture_mm, dt, cfg, obj)
        states.append(state)
        commands.append(cmd)
    return TeleopTrace(states=tuple(states), commands=tuple(commands))


def run_band_following(
    cfg: VetConfig,
    obj: GraspedObject,
    band_hz: tuple[float, float],
    duration_s: float,
    step_mm: float = 1.0,
) -> TeleopTrace:
    """Feedback operator: closes while the felt frequency is below the band,
    opens above it, holds inside. Never looks at the force directly."""
    lo, hi = band_hz
    if not 0 < lo < hi:
        raise ValueError("band must satisfy 0 < lo < hi")
    dt = cfg.teleop.tick_ms / 1000.0
    state = initial_teleop(cfg)
    states, commands = [], []
    for _ in range(max(1, round(duration_s / dt))):
        felt = feedback_frequency(state.grip_force, obj, cfg) if state.grip_force > 0 else 0.0
        if felt < lo:
            command = state.aperture_mm - step_mm
        elif felt > hi:
            command = state.aperture_mm + step_mm
        else:
            command = state.aperture_mm
        state, cmd = step_teleop(state, command, dt, cfg, obj)
        states.append(state)
        commands.append(cmd)
    return TeleopTrace(states=tuple(states), commands=tuple(commands))
