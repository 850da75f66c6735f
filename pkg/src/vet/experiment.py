"""Zone-sensitivity experiment: timed contact/rest trials across finger zones.

Each trial presses a probe into one zone, holds it for the contact
phase, applies a pulse train in the stimulated condition (none in
baseline), and rests. Perceived intensity comes from the synthetic
percept model; pressure from the contact-patch force estimate. The
whole schedule runs on a simulated clock at the configured tick, so
reports carry phase timestamps accurate to one tick.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import VetConfig
from .device import PressEvent, perceive, render_frame
from .stim import (
    Grounding,
    Polarity,
    StimParams,
    clamp_safety,
    default_layout,
    open_array,
    set_electrodes,
)
from .tactile import ReferenceModel, default_calibration, detect_contact
from .zones import FingerZone, zone_center, zone_of

CONDITIONS = ("baseline", "stimulated")


@dataclass(frozen=True)
class TrialResult:
    zone: FingerZone
    condition: str
    trial: int
    pressure: float  # contact-patch normal force estimate
    intensity_score: float
    contact_start_us: int
    contact_end_us: int
    rest_end_us: int


@dataclass(frozen=True)
class ZoneStats:
    zone: FingerZone
    condition: str
    n: int
    minimum: float
    q1: float
    median: float
    q3: float
    maximum: float


@dataclass(frozen=True)
class ZoneReport:
    trials: tuple[TrialResult, ...]
    stats: tuple[ZoneStats, ...]
    seed: int
    tick_ms: float

    def stats_for(self, zone: FingerZone, condition: str) -> ZoneStats:
        for s in self.stats:
            if s.zone is zone and s.condition == condition:
                return s
        raise KeyError(f"no stats for {zone.value}/{condition}")


def _ticks(duration_s: float, tick_ms: float) -> int:
    return max(1, math.ceil(duration_s * 1000.0 / tick_ms))


def _press_in_zone(
    cfg: VetConfig, zone: FingerZone, rng: np.random.Generator
) -> PressEvent:
    """A probe press near the zone center, jittered but never leaving the zone."""
    w, h = cfg.sensor.width, cfg.sensor.height
    cx, cy = zone_center(w, h, zone)
    depth = cfg.experiment.press_depth_mm * float(rng.uniform(0.9, 1.1))
    for _ in range(16):
        x = cx + float(rng.uniform(-2.0, 2.0))
        y = cy + float(rng.uniform(-2.0, 2.0))
        if 0 <= x < w and 0 <= y < h and zone_of(w, h, x, y) is zone:
            return PressEvent(x=x, y=y, radius_px=cfg.experiment.press_radius_px,
                              peak_depth_mm=depth)
    return PressEvent(x=cx, y=cy, radius_px=cfg.experiment.press_radius_px,
                      peak_depth_mm=depth)


def run_zone_experiment(
    cfg: VetConfig,
    seed: int,
    zones: Sequence[FingerZone] | None = None,
) -> ZoneReport:
    zones = tuple(zones) if zones is not None else tuple(FingerZone)
    exp = cfg.experiment
    layout = default_layout(cfg)
    grounding = Grounding(cfg.stim.grounding)
    reference = ReferenceModel(
        baseline=np.full((cfg.sensor.height, cfg.sensor.width), cfg.sensor.baseline),
        noise_sigma=cfg.membrane.noise_sigma,
        calib=default_calibration(cfg),
    )
    contact_ticks = _ticks(exp.contact_s, exp.tick_ms)
    rest_ticks = _ticks(exp.rest_s, exp.tick_ms)
    tick_us = int(round(exp.tick_ms * 1000.0))

    trials: list[TrialResult] = []
    t_us = 0
    frame_seq = 0
    for zi, zone in enumerate(zones):
        for ci, condition in enumerate(CONDITIONS):
            for trial in range(exp.trials_per_zone):
                rng = np.random.default_rng([seed, zi, ci, trial])
                press = _press_in_zone(cfg, zone, rng)
                contact_start = t_us
                frame = render_frame(cfg, [press], seq=frame_seq, t_us=t_us,
                                     noise_seed=seed)
                frame_seq += 1
                patch = detect_contact(frame, reference, cfg)
                if patch is None:
                    raise RuntimeError(
                        f"probe press in {zone.value} produced no detectable contact"
                    )
                pressure = patch.force.normal
                score = 0.0
                if condition == "stimulated":
                    array = set_electrodes(open_array(layout, grounding), patch, layout)
                    params = StimParams(
                        amplitude_ma=float(rng.uniform(1.8, 2.2)),
                        frequency_hz=cfg.stim.default_frequency_hz,
                        pulse_width_us=cfg.stim.pulse_width_us,
                        polarity=Polarity.ALTERNATING,
                        duration_ms=exp.contact_s * 1000.0,
                        electrodes=array.stim_electrodes(),
                    )
                    safe, _ = clamp_safety(params, cfg)
                    score = perceive(array, safe, zone).intensity_score
                t_us += contact_ticks * tick_us
                contact_end = t_us
                t_us += rest_ticks * tick_us
                trials.append(TrialResult(
                    zone=zone, condition=condition, trial=trial,
                    pressure=pressure, intensity_score=score,
                    contact_start_us=contact_start, contact_end_us=contact_end,
                    rest_end_us=t_us,
                ))

    stats = tuple(
        _stats_of(zone, condition,
                  [t.intensity_score for t in trials
                   if t.zone is zone and t.condition == condition])
        for zone in zones for condition in CONDITIONS
    )
    return ZoneReport(trials=tuple(trials), stats=stats, seed=seed, tick_ms=exp.tick_ms)


def _stats_of(zone: FingerZone, condition: str, samples: list[float]) -> ZoneStats:
    arr = np.asarray(samples, dtype=float)
    q1, med, q3 = (float(v) for v in np.percentile(arr, [25, 50, 75]))
    return ZoneStats(
        zone=zone, condition=condition, n=len(samples),
        minimum=float(arr.min()), q1=q1, median=med, q3=q3, maximum=float(arr.max()),
    )


def report_rows(report: ZoneReport) -> list[dict]:
    """Per-trial rows for CSV export."""
    return [
        {
            "zone": t.zone.value,
            "condition": t.condition,
            "trial": t.trial,
            "pressure": t.pressure,
            "intensity_score": t.intensity_score,
            "contact_start_us": t.contact_start_us,
            "contact_end_us": t.contact_end_us,
            "rest_end_us": t.rest_end_us,
        }
        for t in report.trials
    ]


def stats_rows(report: ZoneReport) -> list[dict]:
    """Box-plot summary rows for CSV export."""
    return [
        {
            "zone": s.zone.value,
            "condition": s.condition,
            "n": s.n,
            "min": s.minimum,
            "q1": s.q1,
            "median": s.median,
            "q3": s.q3,
            "max": s.maximum,
        }
        for s in report.stats
    ]
