"""Configuration for the simulated device and its applications.

Everything numeric that an experiment might want to pin lives here, grouped
by subsystem. Configs are plain dataclasses; ``load_config`` merges a JSON
file over the defaults so partial configs are fine. ``config_digest`` gives
the hash recorded in run manifests.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any


@dataclass
class SensorConfig:
    width: int = 64
    height: int = 64
    baseline: float = 0.8       # resting luminance of the membrane, 0..1
    frame_hz: float = 30.0


@dataclass
class MembraneConfig:
    depth_cap_mm: float = 3.0        # indentation saturates here
    strain_limit: float = 3.0        # max areal stretch ratio of the membrane
    pitch_mm: float = 0.25           # sensor pixel pitch
    indentation_gain: float = 0.25   # luminance lost per mm of indentation
    # brightening per unit of bulge curvature; large enough that the pile-up
    # ring outshines the indentation tail it sits on
    ring_gain: float = 6.0
    press_sigma_factor: float = 0.75  # gaussian sigma as a fraction of press radius
    noise_sigma: float = 0.005       # sensor read noise, luminance units


@dataclass
class ContactConfig:
    k_sigma: float = 4.0         # deviation threshold in noise sigmas
    abs_threshold: float = 0.02  # plus this floor, luminance units
    min_area_px: int = 9         # reject blobs smaller than this


@dataclass
class FlowConfig:
    block_px: int = 8
    search_radius_px: int = 6
    activity_floor: float = 0.03  # blocks flatter than this are skipped


@dataclass
class ForceConfig:
    normal_gain: float = 0.01  # force units per summed mm of indentation
    shear_gain: float = 0.1    # force units per px of mean flow


@dataclass
class StimConfig:
    max_amplitude_ma: float = 5.0
    default_frequency_hz: float = 50.0
    min_frequency_hz: float = 0.5
    max_frequency_hz: float = 100.0
    pulse_width_us: int = 200
    max_duration_ms: float = 10_000.0
    grounding: str = "back"
    # above this amplitude only charge-symmetric (alternating) trains are allowed
    alternating_floor_ma: float = 2.0


@dataclass
class LoadConfig:
    r_nominal_kohm: float = 50.0   # load the drive chain is calibrated for
    r_initial_kohm: float = 50.0
    r_min_kohm: float = 1.0
    r_max_kohm: float = 100.0
    drift_rate_kohm_s: float = 2.0   # random-walk scale of skin impedance
    sense_noise_ma: float = 0.0      # measurement noise on the current sense


@dataclass
class RegulatorConfig:
    # PI on relative current error, acting on the log of the drive gain, so
    # convergence speed does not depend on where in the load band we sit.
    kp: float = 0.1
    ki_per_ms: float = 0.5
    windup_limit: float = 16.0     # bound on the integrated relative error, ms
    measured_floor_ma: float = 0.02


@dataclass
class LayoutConfig:
    rows: int = 4
    cols: int = 4


@dataclass
class PowerConfig:
    startup_ma: float = 250.0
    static_ma: float = 130.0
    boot_ms: float = 500.0


@dataclass
class ExperimentConfig:
    contact_s: float = 2.0
    rest_s: float = 10.0
    trials_per_zone: int = 10
    tick_ms: float = 10.0
    press_depth_mm: float = 1.5
    press_radius_px: float = 6.0


@dataclass
class GameConfig:
    world_w: float = 24.0
    world_h: float = 16.0
    cell: float = 1.0
    flow_gain: float = 4.0      # accel per px of mean flow
    drag_per_s: float = 1.2
    v_max: float = 5.0
    n_ice: int = 24
    n_fire: int = 16
    n_cargo: int = 6
    tick_ms: float = 20.0
    burst_period_ms: float = 500.0  # rhythm of sustained-contact feedback
    burst_on_ms: float = 100.0


@dataclass
class TeleopConfig:
    aperture_open_mm: float = 80.0
    aperture_min_mm: float = 0.0
    slew_mm_s: float = 60.0
    grip_force_ref: float = 10.0   # force that maps to the top of the band
    stiffness_ref: float = 1.0
    freq_gain: float = 20.0
    slip_threshold: float = 0.5
    crush_force: float = 6.0
    tick_ms: float = 20.0


@dataclass
class VetConfig:
    sensor: SensorConfig = field(default_factory=SensorConfig)
    membrane: MembraneConfig = field(default_factory=MembraneConfig)
    contact: ContactConfig = field(default_factory=ContactConfig)
    flow: FlowConfig = field(default_factory=FlowConfig)
    force: ForceConfig = field(default_factory=ForceConfig)
    stim: StimConfig = field(default_factory=StimConfig)
    load: LoadConfig = field(default_factory=LoadConfig)
    regulator: RegulatorConfig = field(default_factory=RegulatorConfig)
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    power: PowerConfig = field(default_factory=PowerConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    game: GameConfig = field(default_factory=GameConfig)
    teleop: TeleopConfig = field(default_factory=TeleopConfig)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


class ConfigError(ValueError):
    pass


def default_config() -> VetConfig:
    return VetConfig()


def _merge_section(obj: Any, data: dict[str, Any], path: str) -> None:
    for key, value in data.items():
        if not hasattr(obj, key):
            raise ConfigError(f"unknown config key: {path}{key}")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current):
            if not isinstance(value, dict):
                raise ConfigError(f"config section {path}{key} must be an object")
            _merge_section(current, value, f"{path}{key}.")
        else:
            if isinstance(value, bool) or not isinstance(value, (int, float, str)):
                raise ConfigError(f"config key {path}{key} has unsupported type")
            setattr(obj, key, type(current)(value))


def config_from_dict(data: dict[str, Any]) -> VetConfig:
    cfg = VetConfig()
    _merge_section(cfg, data, "")
    validate_config(cfg)
    return cfg


def load_config(path: str | Path | None) -> VetConfig:
    """Defaults, with the JSON file at ``path`` (if given) merged on top."""
    if path is None:
        return VetConfig()
    raw = Path(path).read_text()
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    return config_from_dict(data)


def validate_config(cfg: VetConfig) -> None:
    if cfg.sensor.width <= 0 or cfg.sensor.height <= 0:
        raise ConfigError("sensor dimensions must be positive")
    if not 0.0 < cfg.sensor.baseline <= 1.0:
        raise ConfigError("sensor.baseline must be in (0, 1]")
    if cfg.stim.max_amplitude_ma <= 0:
        raise ConfigError("stim.max_amplitude_ma must be positive")
    if cfg.stim.min_frequency_hz <= 0 or cfg.stim.max_frequency_hz < cfg.stim.min_frequency_hz:
        raise ConfigError("stim frequency band is inverted")
    if cfg.stim.pulse_width_us <= 0:
        raise ConfigError("stim.pulse_width_us must be positive")
    if cfg.stim.grounding not in ("back", "ring", "palm", "dorsal"):
        raise ConfigError(f"unknown grounding configuration: {cfg.stim.grounding!r}")
    if cfg.load.r_min_kohm <= 0 or cfg.load.r_max_kohm < cfg.load.r_min_kohm:
        raise ConfigError("load resistance band is inverted")
    if cfg.layout.rows <= 0 or cfg.layout.cols <= 0:
        raise ConfigError("electrode layout must have positive dimensions")


def config_digest(cfg: VetConfig) -> str:
    """Stable hash of the effective config, for run manifests."""
    canon = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()
