"""Physical models of the simulated device.

Four small models, one per physical subsystem:

* membrane optics: presses indent an elastomer skin; indentation thins it
  and darkens the image locally, while displaced material piles up around
  the contact and brightens a surrounding ring;
* skin load: the electrical impedance seen by the stimulator, drifting as
  a bounded random walk, which turns commanded current into delivered
  current;
* percept: what a wearer would report for a given pulse train and routing;
* power: supply draw through the boot sequence.

Stateful steps take explicit state plus a seed and return new state, so
runs replay bit-identically regardless of call batching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy import ndimage

from .config import VetConfig
from .frames import TactileFrame
from .stim import Polarity, StimParams, SwitchArray
from .tactile import DepthCalibration
from .zones import SENSITIVITY, FingerZone


@dataclass(frozen=True)
class PressEvent:
    """One probe contact: where, how wide, how deep, and how it moves."""

    x: float
    y: float
    radius_px: float
    peak_depth_mm: float
    vx_px: float = 0.0  # drift per frame
    vy_px: float = 0.0

    def __post_init__(self) -> None:
        if self.radius_px <= 0:
            raise ValueError("press radius must be positive")
        if self.peak_depth_mm < 0:
            raise ValueError("press depth must be non-negative")

    def advanced(self, frames: float) -> "PressEvent":
        return replace(self, x=self.x + self.vx_px * frames, y=self.y + self.vy_px * frames)


def depth_field(cfg: VetConfig, presses: list[PressEvent]) -> np.ndarray:
    """Indentation depth in mm per pixel, capped and strain-limited."""
    h, w = cfg.sensor.height, cfg.sensor.width
    depth = np.zeros((h, w), dtype=np.float64)
    if presses:
        ys, xs = np.mgrid[0:h, 0:w]
        for p in presses:
            sigma = cfg.membrane.press_sigma_factor * p.radius_px
            r2 = (xs - p.x) ** 2 + (ys - p.y) ** 2
            depth += p.peak_depth_mm * np.exp(-r2 / (2.0 * sigma * sigma))
    np.clip(depth, 0.0, cfg.membrane.depth_cap_mm, out=depth)
    return _limit_strain(cfg, depth)


def strain_map(cfg: VetConfig, depth: np.ndarray) -> np.ndarray:
    """Areal stretch ratio of the deformed membrane surface."""
    gy, gx = np.gradient(depth, cfg.membrane.pitch_mm)
    return np.sqrt(1.0 + gx * gx + gy * gy)


def _limit_strain(cfg: VetConfig, depth: np.ndarray) -> np.ndarray:
    limit = cfg.membrane.strain_limit
    peak = strain_map(cfg, depth).max()
    if peak <= limit:
        return depth
    # scale the whole field so the steepest point sits exactly at the limit
    scale = math.sqrt((limit * limit - 1.0) / (peak * peak - 1.0))
    return depth * scale


def render_frame(
    cfg: VetConfig,
    presses: list[PressEvent],
    seq: int,
    t_us: int,
    noise_seed: int | None = None,
) -> TactileFrame:
    """Image the membrane under the given contacts.

    Indented regions lose luminance in proportion to depth; the bulge ring
    around each contact (peaking near 1.5x the press radius) gains it.
    With a seed given, read noise is drawn from a stream keyed on
    (seed, seq), so a frame sequence is reproducible frame-by-frame.
    """
    w, h = cfg.sensor.width, cfg.sensor.height
    for p in presses:
        if not (0 <= p.x < w and 0 <= p.y < h):
            raise ValueError(f"press at ({p.x}, {p.y}) is outside the sensing area")
    depth = depth_field(cfg, presses)
    img = np.full(depth.shape, cfg.sensor.baseline, dtype=np.float64)
    img -= cfg.membrane.indentation_gain * depth
    bulge = ndimage.laplace(depth)
    img += cfg.membrane.ring_gain * np.maximum(bulge, 0.0)
    if noise_seed is not None and cfg.membrane.noise_sigma > 0:
        rng = np.random.default_rng([noise_seed, seq])
        img += rng.normal(0.0, cfg.membrane.noise_sigma, size=img.shape)
    np.clip(img, 0.0, 1.0, out=img)
    return TactileFrame(seq=seq, t_us=t_us, pixels=img.astype(np.float32))


def calibrate_depth(cfg: VetConfig, n_knots: int = 9) -> DepthCalibration:
    """Identify the deficit->depth curve from the forward model itself.

    Renders single presses of known depth (noise off) and reads the
    intensity deficit at the press center; the resulting knots invert the
    rendering exactly wherever the response is monotone.
    """
    cx, cy = cfg.sensor.width / 2.0, cfg.sensor.height / 2.0
    radius = min(cfg.sensor.width, cfg.sensor.height) / 6.0
    depths = np.linspace(0.0, cfg.membrane.depth_cap_mm, n_knots + 1)[1:]
    deficits = [0.0]
    knots = [0.0]
    for d in depths:
        frame = render_frame(cfg, [PressEvent(cx, cy, radius, float(d))], seq=0, t_us=0)
        deficit = cfg.sensor.baseline - float(frame.pixels[int(cy), int(cx)])
        if deficit > deficits[-1]:
            deficits.append(deficit)
            knots.append(float(d))
    return DepthCalibration(deficit_knots=tuple(deficits), depth_knots_mm=tuple(knots))


# --- skin load ---------------------------------------------------------------


@dataclass(frozen=True)
class SkinLoad:
    """Electrode-skin impedance, evolving as a reflected random walk."""

    r_kohm: float
    steps: int = 0


def initial_load(cfg: VetConfig) -> SkinLoad:
    return SkinLoad(r_kohm=cfg.load.r_initial_kohm, steps=0)


def step_load(
    load: SkinLoad, drive_ma: float, dt_ms: float, cfg: VetConfig, seed: int
) -> tuple[SkinLoad, float]:
    """Advance the impedance walk one tick and measure the delivered current.

    The output chain is calibrated for ``r_nominal_kohm``: a stiffer load
    pulls delivered current below the command, a softer one above. The walk
    increment is drawn from a generator keyed on (seed, step index), so the
    same seed walks the identical path regardless of call batching, and the
    resistance reflects off the configured bounds instead of sticking.
    """
    if dt_ms <= 0:
        raise ValueError("load step must advance time")
    rng = np.random.default_rng([seed, load.steps])
    sigma = cfg.load.drift_rate_kohm_s * math.sqrt(dt_ms / 1000.0)
    r = load.r_kohm + (rng.normal(0.0, sigma) if sigma > 0 else 0.0)
    lo, hi = cfg.load.r_min_kohm, cfg.load.r_max_kohm
    span = hi - lo
    if span > 0:
        # reflect off the band edges (triangle fold) instead of clamping,
        # so the walk keeps moving near the bounds
        x = (r - lo) % (2.0 * span)
        r = lo + (span - abs(x - span))
    else:
        r = lo
    new = SkinLoad(r_kohm=float(r), steps=load.steps + 1)
    measured = drive_ma * (cfg.load.r_nominal_kohm / new.r_kohm)
    if cfg.load.sense_noise_ma > 0:
        measured += rng.normal(0.0, cfg.load.sense_noise_ma)
    return new, max(float(measured), 0.0)


# --- percept -----------------------------------------------------------------


class PerceptLocation(Enum):
    UPPER_FINGERTIP = "upper_fingertip"
    LOWER_FINGERTIP = "lower_fingertip"
    CONTACT_POINT = "contact_point"


_LOCATION_BY_POLARITY = {
    Polarity.POSITIVE: PerceptLocation.UPPER_FINGERTIP,
    Polarity.NEGATIVE: PerceptLocation.LOWER_FINGERTIP,
    Polarity.ALTERNATING: PerceptLocation.CONTACT_POINT,
}


@dataclass(frozen=True)
class PerceptEstimate:
    """Modelled wearer report: where the sensation sits and how strong."""

    location: PerceptLocation
    intensity_score: float
    zone: FingerZone


def perceive(array: SwitchArray, params: StimParams, zone: FingerZone) -> PerceptEstimate:
    """Map a pulse train and routing to a perceived location and strength.

    Positive trains read high on the pad, negative ones low, alternating
    ones at the contact point itself. Strength saturates with amplitude,
    grows weakly with frequency, and is weighted by the zone's sensitivity.
    No closed stim switch or zero amplitude means nothing is felt. Pure
    function of its arguments.
    """
    location = _LOCATION_BY_POLARITY[params.polarity]
    if not array.stim_electrodes() or params.amplitude_ma <= 0.0:
        return PerceptEstimate(location=location, intensity_score=0.0, zone=zone)
    amp_term = 1.0 - math.exp(-params.amplitude_ma / 2.0)
    freq_term = 0.5 + 0.5 * min(params.frequency_hz, 100.0) / 100.0
    score = SENSITIVITY[zone] * amp_term * freq_term
    return PerceptEstimate(location=location, intensity_score=float(score), zone=zone)


# --- power -------------------------------------------------------------------


class PowerMode(Enum):
    STARTUP = "startup"
    IDLE = "idle"
    ACTIVE = "active"


@dataclass(frozen=True)
class PowerState:
    mode: PowerMode
    t_in_mode_ms: float
    draw_ma: float


def initial_power(cfg: VetConfig) -> PowerState:
    return PowerState(PowerMode.STARTUP, 0.0, cfg.power.startup_ma)


def step_power(
    state: PowerState, dt_ms: float, cfg: VetConfig, stimulating: bool = False
) -> PowerState:
    """Advance the supply model; draw is the startup current until boot
    ends, the static figure afterwards whether idle or stimulating."""
    if dt_ms <= 0:
        raise ValueError("power step must advance time")
    if state.mode is PowerMode.STARTUP:
        t = state.t_in_mode_ms + dt_ms
        if t < cfg.power.boot_ms:
            return PowerState(PowerMode.STARTUP, t, cfg.power.startup_ma)
        mode = PowerMode.ACTIVE if stimulating else PowerMode.IDLE
        return PowerState(mode, t - cfg.power.boot_ms, cfg.power.static_ma)
    mode = PowerMode.ACTIVE if stimulating else PowerMode.IDLE
    t = state.t_in_mode_ms + dt_ms if state.mode is mode else dt_ms
    return PowerState(mode, t, cfg.power.static_ma)
