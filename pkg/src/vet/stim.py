"""Electrotactile stimulation engine.

The pulse generator produces rectangular biphasic trains described by
``StimParams``, two output channels' worth. Amplitude regulation runs as a
discrete PI loop against the measured delivered current; because the skin
load can sit anywhere in a two-decade band, the controller works on the
*relative* current error and integrates in the log of its drive gain,
which makes closed-loop convergence independent of where in the band the
load happens to be.

Routing is a per-electrode switch matrix (stim / ground / open) plus one
of four return-path placements. ``clamp_safety`` is the single gate every
outgoing command passes through.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from .config import VetConfig

if TYPE_CHECKING:
    from .tactile import ContactPatch


class Channel(Enum):
    AC1 = "ac1"
    AC2 = "ac2"


class Polarity(Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    ALTERNATING = "alternating"


class Grounding(Enum):
    BACK = "back"
    RING = "ring"
    PALM = "palm"
    DORSAL = "dorsal"


class SwitchState(Enum):
    OPEN = "open"
    STIM = "stim"
    GROUND = "ground"


# center block of the default 4x4 layout; used when feedback has no
# contact patch to anchor to
DEFAULT_FEEDBACK_ELECTRODES = frozenset({5, 6, 9, 10})


@dataclass(frozen=True)
class StimParams:
    """One pulse-train command for one output channel."""

    amplitude_ma: float
    frequency_hz: float
    pulse_width_us: int
    polarity: Polarity
    duration_ms: float
    electrodes: frozenset[int]
    channel: Channel = Channel.AC1

    def __post_init__(self) -> None:
        if not math.isfinite(self.amplitude_ma) or self.amplitude_ma < 0:
            raise ValueError("amplitude must be finite and non-negative")
        if not math.isfinite(self.frequency_hz) or self.frequency_hz <= 0:
            raise ValueError("frequency must be finite and positive")
        if int(self.pulse_width_us) != self.pulse_width_us or self.pulse_width_us < 1:
            raise ValueError("pulse width must be a positive whole number of microseconds")
        if not math.isfinite(self.duration_ms) or self.duration_ms < 0:
            raise ValueError("duration must be finite and non-negative")
        if self.duration_ms > 0 and not self.electrodes:
            raise ValueError("a timed train needs at least one electrode")
        object.__setattr__(self, "electrodes", frozenset(self.electrodes))
        object.__setattr__(self, "pulse_width_us", int(self.pulse_width_us))

    @property
    def period_us(self) -> float:
        return 1e6 / self.frequency_hz


@dataclass(frozen=True)
class WaveformSample:
    t_us: int
    drive_ma: float


def synth_sample(params: StimParams, t_us: int) -> WaveformSample:
    """Instantaneous drive at integer microsecond ``t_us`` since train start.

    Positive and negative trains put one pulse at the start of each period.
    Alternating trains pair it with an opposite pulse half a period later;
    with a whole-microsecond pulse width each pulse window covers exactly
    ``pulse_width_us`` sample instants, so the sampled train is charge
    balanced over whole periods.
    """
    if t_us < 0 or t_us >= params.duration_ms * 1000.0:
        raise ValueError("sample time outside the train duration")
    phase = math.fmod(float(t_us), params.period_us)
    return WaveformSample(t_us=t_us, drive_ma=_drive_at(params, phase))


def _drive_at(params: StimParams, phase: float) -> float:
    amp = params.amplitude_ma
    pw = params.pulse_width_us
    if phase < pw:
        return -amp if params.polarity is Polarity.NEGATIVE else amp
    if params.polarity is Polarity.ALTERNATING:
        half = params.period_us / 2.0
        if half <= phase < half + pw:
            return -amp
    return 0.0


def sample_train(params: StimParams, t_us: np.ndarray) -> np.ndarray:
    """Vectorized ``synth_sample`` over an integer-microsecond time grid."""
    t = np.asarray(t_us, dtype=np.float64)
    if t.size and (t.min() < 0 or t.max() >= params.duration_ms * 1000.0):
        raise ValueError("sample times outside the train duration")
    phase = np.mod(t, params.period_us)
    out = np.zeros(t.shape, dtype=np.float64)
    pw = params.pulse_width_us
    amp = params.amplitude_ma
    first = phase < pw
    if params.polarity is Polarity.NEGATIVE:
        out[first] = -amp
    else:
        out[first] = amp
    if params.polarity is Polarity.ALTERNATING:
        half = params.period_us / 2.0
        out[(phase >= half) & (phase < half + pw)] = -amp
    return out


# --- safety ------------------------------------------------------------------


def clamp_safety(params: StimParams, cfg: VetConfig) -> tuple[StimParams, tuple[str, ...]]:
    """Force a command into the safe envelope; report which fields moved.

    Rules, applied in order: amplitude into [0, max]; frequency into the
    legal band; duration capped; pulse width short enough that both pulses
    of an alternating train fit strictly inside one period; anything above
    the charge-symmetry floor is forced to alternating polarity. Applying
    the clamp twice changes nothing.
    """
    s = cfg.stim
    clamped: list[str] = []
    amp = params.amplitude_ma
    if amp > s.max_amplitude_ma:
        amp = s.max_amplitude_ma
        clamped.append("amplitude_ma")
    freq = min(max(params.frequency_hz, s.min_frequency_hz), s.max_frequency_hz)
    if freq != params.frequency_hz:
        clamped.append("frequency_hz")
    duration = params.duration_ms
    if duration > s.max_duration_ms:
        duration = s.max_duration_ms
        clamped.append("duration_ms")
    # keep a one-microsecond guard after the second pulse so trains never
    # straddle the period boundary
    pw_limit = max(1, int(1e6 / freq / 2.0) - 1)
    pw = params.pulse_width_us
    if pw > pw_limit:
        pw = pw_limit
        clamped.append("pulse_width_us")
    polarity = params.polarity
    if amp > s.alternating_floor_ma and polarity is not Polarity.ALTERNATING:
        polarity = Polarity.ALTERNATING
        clamped.append("polarity")
    safe = replace(
        params,
        amplitude_ma=amp,
        frequency_hz=freq,
        pulse_width_us=pw,
        polarity=polarity,
        duration_ms=duration,
    )
    return safe, tuple(clamped)


# --- regulation --------------------------------------------------------------


@dataclass(frozen=True)
class RegulatorState:
    """PI state for one output channel.

    ``drive_gain`` is what the loop actually outputs: the factor applied to
    the commanded amplitude. It is the exponential of the PI sum, so it
    scales but never flips sign. ``integral_ms`` accumulates the relative
    error (anti-windup bounded); ``last_error_ma`` is kept for telemetry.
    """

    setpoint_ma: float
    drive_gain: float = 1.0
    integral_ms: float = 0.0
    last_error_ma: float = 0.0


def regulate(
    state: RegulatorState, measured_ma: float, dt_ms: float, cfg: VetConfig
) -> tuple[RegulatorState, float]:
    """One control tick: fold in a current measurement, emit the drive scale.

    The error is normalized by the measurement itself, so a load at either
    edge of the impedance band converges at the same rate as one in the
    middle. The scaled command ``drive_gain * setpoint`` is hard-limited to
    the safety maximum no matter what the loop asks for.
    """
    if dt_ms <= 0:
        raise ValueError("regulator tick must be positive")
    if not math.isfinite(measured_ma):
        raise ValueError("measured current must be finite")
    if measured_ma < 0:
        raise ValueError("measured current must be non-negative")
    r = cfg.regulator
    setpoint = state.setpoint_ma
    if setpoint <= 0:
        return replace(state, drive_gain=0.0, last_error_ma=-measured_ma), 0.0
    error = setpoint - measured_ma
    floor = r.measured_floor_ma * setpoint
    e_rel = error / max(measured_ma, floor)
    e_rel = min(max(e_rel, -1.0), 1.5)
    integral = state.integral_ms + e_rel * dt_ms
    integral = min(max(integral, -r.windup_limit), r.windup_limit)
    gain_cap = cfg.stim.max_amplitude_ma / setpoint
    gain = math.exp(r.kp * e_rel + r.ki_per_ms * integral)
    gain = min(max(gain, 0.0), gain_cap)
    new = RegulatorState(
        setpoint_ma=setpoint,
        drive_gain=gain,
        integral_ms=integral,
        last_error_ma=error,
    )
    return new, gain


# --- electrode routing -------------------------------------------------------


@dataclass(frozen=True)
class ElectrodeLayout:
    """Grid of electrode pads tiled over the sensing area."""

    rows: int
    cols: int
    width_px: int
    height_px: int

    @property
    def count(self) -> int:
        return self.rows * self.cols

    def cell_rect(self, idx: int) -> tuple[int, int, int, int]:
        """(x0, y0, x1, y1) pixel bounds of electrode ``idx``, end-exclusive."""
        if not 0 <= idx < self.count:
            raise IndexError(f"electrode {idx} out of range")
        row, col = divmod(idx, self.cols)
        x0 = col * self.width_px // self.cols
        x1 = (col + 1) * self.width_px // self.cols
        y0 = row * self.height_px // self.rows
        y1 = (row + 1) * self.height_px // self.rows
        return x0, y0, x1, y1

    def cell_center(self, idx: int) -> tuple[float, float]:
        x0, y0, x1, y1 = self.cell_rect(idx)
        return (x0 + x1) / 2.0, (y0 + y1) / 2.0


def default_layout(cfg: VetConfig) -> ElectrodeLayout:
    return ElectrodeLayout(
        rows=cfg.layout.rows,
        cols=cfg.layout.cols,
        width_px=cfg.sensor.width,
        height_px=cfg.sensor.height,
    )


@dataclass(frozen=True)
class SwitchArray:
    """Snapshot of the routing matrix plus the chosen return path."""

    states: tuple[SwitchState, ...]
    grounding: Grounding

    def state_of(self, idx: int) -> SwitchState:
        return self.states[idx]

    def stim_electrodes(self) -> frozenset[int]:
        return frozenset(i for i, s in enumerate(self.states) if s is SwitchState.STIM)

    def ground_electrodes(self) -> frozenset[int]:
        return frozenset(i for i, s in enumerate(self.states) if s is SwitchState.GROUND)

    def packed_bits(self) -> int:
        """Two bits per electrode (0 open, 1 stim, 2 ground), low bits first."""
        word = 0
        for i, s in enumerate(self.states):
            code = {SwitchState.OPEN: 0, SwitchState.STIM: 1, SwitchState.GROUND: 2}[s]
            word |= code << (2 * i)
        return word


def open_array(layout: ElectrodeLayout, grounding: Grounding) -> SwitchArray:
    return SwitchArray(states=(SwitchState.OPEN,) * layout.count, grounding=grounding)


def set_electrodes(
    array: SwitchArray,
    patch: "ContactPatch | None",
    layout: ElectrodeLayout,
) -> SwitchArray:
    """Route stimulation onto the electrodes under a contact patch.

    Every pad overlapping the patch mask switches to STIM. Shared-return
    placements (back, palm) carry the return off-matrix; the per-finger
    ones (ring, dorsal) need a local return, so the pad farthest from the
    contact centroid is switched to GROUND. No contact opens everything;
    stimulation never lands anywhere the contact is not.
    """
    if patch is None or not patch.mask.any():
        return open_array(layout, array.grounding)
    mask = np.asarray(patch.mask, dtype=bool)
    if mask.shape != (layout.height_px, layout.width_px):
        raise ValueError("contact mask does not match the electrode layout extent")
    states = [SwitchState.OPEN] * layout.count
    hit = []
    for i in range(layout.count):
        x0, y0, x1, y1 = layout.cell_rect(i)
        if mask[y0:y1, x0:x1].any():
            hit.append(i)
            states[i] = SwitchState.STIM
    if hit and array.grounding in (Grounding.RING, Grounding.DORSAL):
        cx, cy = patch.centroid
        candidates = [i for i in range(layout.count) if states[i] is SwitchState.OPEN]
        if not candidates:
            # fully covered pad: sacrifice the farthest stim site for the return
            candidates = hit
        far = max(
            candidates,
            key=lambda i: (
                (layout.cell_center(i)[0] - cx) ** 2 + (layout.cell_center(i)[1] - cy) ** 2,
                i,
            ),
        )
        states[far] = SwitchState.GROUND
    return SwitchArray(states=tuple(states), grounding=array.grounding)


def array_for_electrodes(
    electrodes: "frozenset[int] | set[int]",
    layout: ElectrodeLayout,
    grounding: Grounding,
) -> SwitchArray:
    """Route stimulation onto an explicit electrode set (command path).

    Same return-pad policy as set_electrodes, with the contact centroid
    replaced by the mean of the requested pad centers.
    """
    ids = sorted(electrodes)
    if any(not 0 <= i < layout.count for i in ids):
        raise ValueError(f"electrode id out of range 0..{layout.count - 1}")
    if not ids:
        return open_array(layout, grounding)
    states = [SwitchState.OPEN] * layout.count
    for i in ids:
        states[i] = SwitchState.STIM
    if grounding in (Grounding.RING, Grounding.DORSAL):
        centers = [layout.cell_center(i) for i in ids]
        cx = sum(c[0] for c in centers) / len(centers)
        cy = sum(c[1] for c in centers) / len(centers)
        candidates = [i for i in range(layout.count) if states[i] is SwitchState.OPEN] or ids
        far = max(
            candidates,
            key=lambda i: (
                (layout.cell_center(i)[0] - cx) ** 2 + (layout.cell_center(i)[1] - cy) ** 2,
                i,
            ),
        )
        states[far] = SwitchState.GROUND
    return SwitchArray(states=tuple(states), grounding=grounding)


def has_return_path(array: SwitchArray) -> bool:
    """True when active stimulation has somewhere for the current to go."""
    if not array.stim_electrodes():
        return True
    if array.grounding in (Grounding.BACK, Grounding.PALM):
        return True
    return bool(array.ground_electrodes())


# --- grounding trade-offs ----------------------------------------------------


@dataclass(frozen=True)
class GroundingTrait:
    grounding: Grounding
    electrodes_per_hand: int
    shared_return: bool
    advantage: str
    disadvantage: str


_GROUNDING_TRAITS = {
    Grounding.BACK: GroundingTrait(
        grounding=Grounding.BACK,
        electrodes_per_hand=1,
        shared_return=True,
        advantage="5 fingers share one grounding electrode.",
        disadvantage="Stimulation happens on both the inner finger and palm.",
    ),
    Grounding.RING: GroundingTrait(
        grounding=Grounding.RING,
        electrodes_per_hand=5,
        shared_return=False,
        advantage="Requires small current.",
        disadvantage="5 grounding electrodes.",
    ),
    Grounding.PALM: GroundingTrait(
        grounding=Grounding.PALM,
        electrodes_per_hand=1,
        shared_return=True,
        advantage="5 fingers share one grounding electrode.",
        disadvantage="Inconvenient for hand manipulation.",
    ),
    Grounding.DORSAL: GroundingTrait(
        grounding=Grounding.DORSAL,
        electrodes_per_hand=5,
        shared_return=False,
        advantage="Stimulation is focused on the fingers being stimulated.",
        disadvantage="5 grounding electrodes.",
    ),
}


def grounding_info(grounding: Grounding) -> GroundingTrait:
    """Wiring trade-offs of each return-path placement. Default is back."""
    return _GROUNDING_TRAITS[grounding]
