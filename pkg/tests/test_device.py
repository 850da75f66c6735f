"""Device models: membrane rendering, skin load, percept, power."""

import numpy as np
import pytest

from vet.device import (
    PerceptLocation,
    PowerMode,
    PressEvent,
    SkinLoad,
    depth_field,
    initial_load,
    initial_power,
    perceive,
    render_frame,
    step_load,
    step_power,
    strain_map,
)
from vet.stim import Grounding, Polarity, StimParams, default_layout, open_array, set_electrodes
from vet.tactile import detect_contact, set_reference
from vet.zones import SENSITIVITY, FingerZone


def press(x=32, y=32, r=8.0, d=2.0, **kw):
    return PressEvent(x, y, r, d, **kw)


def stim_params(**kw):
    base = dict(
        amplitude_ma=1.0,
        frequency_hz=50.0,
        pulse_width_us=200,
        polarity=Polarity.ALTERNATING,
        duration_ms=1000.0,
        electrodes=frozenset({5}),
    )
    base.update(kw)
    return StimParams(**base)


# --- membrane ----------------------------------------------------------------


def test_empty_scene_renders_baseline_exactly(cfg):
    frame = render_frame(cfg, [], 0, 0)
    assert np.all(frame.pixels == np.float32(cfg.sensor.baseline))


def test_press_darkens_center_brightens_ring(cfg):
    frame = render_frame(cfg, [press(d=2.0, r=8.0)], 0, 0)
    base = cfg.sensor.baseline
    assert frame.pixels[32, 32] < base
    # the bulge ring peaks around 1.5x the press radius
    ring = float(frame.pixels[32, 32 + 12])
    assert ring > base


def test_same_seed_renders_identical_noise(cfg):
    a = render_frame(cfg, [press()], 5, 0, noise_seed=99)
    b = render_frame(cfg, [press()], 5, 0, noise_seed=99)
    assert np.array_equal(a.pixels, b.pixels)
    c = render_frame(cfg, [press()], 6, 0, noise_seed=99)
    assert not np.array_equal(a.pixels, c.pixels)  # per-frame stream differs


def test_depth_saturates_at_cap(cfg):
    overlapping = [press(d=2.5), press(x=33, d=2.5)]
    depth = depth_field(cfg, overlapping)
    assert depth.max() <= cfg.membrane.depth_cap_mm + 1e-12


def test_press_outside_bounds_rejected(cfg):
    with pytest.raises(ValueError):
        render_frame(cfg, [press(x=70)], 0, 0)


def test_press_validation():
    with pytest.raises(ValueError):
        PressEvent(10, 10, 0.0, 1.0)
    with pytest.raises(ValueError):
        PressEvent(10, 10, 5.0, -0.1)


def test_strain_never_exceeds_limit(cfg):
    rng = np.random.default_rng(31)
    for _ in range(50):
        presses = [
            press(
                x=float(rng.uniform(5, 59)),
                y=float(rng.uniform(5, 59)),
                r=float(rng.uniform(0.5, 10)),
                d=float(rng.uniform(0.1, 3.0)),
            )
            for _ in range(rng.integers(1, 4))
        ]
        depth = depth_field(cfg, presses)
        assert strain_map(cfg, depth).max() <= cfg.membrane.strain_limit + 1e-9


def test_moving_press_advances_by_velocity(cfg):
    p = press(x=20, y=30, **{"vx_px": 1.5, "vy_px": -0.5})
    q = p.advanced(4)
    assert q.x == pytest.approx(26.0)
    assert q.y == pytest.approx(28.0)


# --- skin load ---------------------------------------------------------------


def test_identity_load_measures_what_is_driven(cfg):
    cfg.load.drift_rate_kohm_s = 0.0
    load = SkinLoad(r_kohm=cfg.load.r_nominal_kohm)
    _, measured = step_load(load, 1.25, 1.0, cfg, seed=0)
    assert measured == pytest.approx(1.25)


def test_zero_drive_measures_zero(cfg):
    load = initial_load(cfg)
    _, measured = step_load(load, 0.0, 1.0, cfg, seed=0)
    assert measured == 0.0


def test_walk_stays_in_band_for_many_seeds(cfg):
    cfg.load.drift_rate_kohm_s = 5.0
    for seed in range(200):
        load = SkinLoad(r_kohm=50.0)
        for _ in range(100):  # 10 s at 100 ms steps
            load, _ = step_load(load, 1.0, 100.0, cfg, seed=seed)
            assert cfg.load.r_min_kohm <= load.r_kohm <= cfg.load.r_max_kohm


def test_walk_path_independent_of_batching(cfg):
    cfg.load.drift_rate_kohm_s = 2.0
    a = SkinLoad(r_kohm=50.0)
    for _ in range(10):
        a, _ = step_load(a, 1.0, 10.0, cfg, seed=7)
    b = SkinLoad(r_kohm=50.0)
    for _ in range(5):
        b, _ = step_load(b, 1.0, 10.0, cfg, seed=7)
    for _ in range(5):
        b, _ = step_load(b, 1.0, 10.0, cfg, seed=7)
    assert a == b


# --- percept -----------------------------------------------------------------


def stim_array(cfg):
    layout = default_layout(cfg)
    ref = set_reference([render_frame(cfg, [], 0, 0)], cfg)
    frame = render_frame(cfg, [press()], 1, 0)
    return set_electrodes(open_array(layout, Grounding.BACK), detect_contact(frame, ref, cfg), layout)


def test_polarity_maps_to_perceived_location(cfg):
    arr = stim_array(cfg)
    cases = {
        Polarity.POSITIVE: PerceptLocation.UPPER_FINGERTIP,
        Polarity.NEGATIVE: PerceptLocation.LOWER_FINGERTIP,
        Polarity.ALTERNATING: PerceptLocation.CONTACT_POINT,
    }
    for pol, where in cases.items():
        est = perceive(arr, stim_params(polarity=pol), FingerZone.FINGERTIP)
        assert est.location is where


def test_open_array_or_zero_amplitude_feels_nothing(cfg):
    layout = default_layout(cfg)
    arr = stim_array(cfg)
    idle = open_array(layout, Grounding.BACK)
    assert perceive(idle, stim_params(), FingerZone.FINGERTIP).intensity_score == 0.0
    assert perceive(arr, stim_params(amplitude_ma=0.0), FingerZone.FINGERTIP).intensity_score == 0.0


def test_intensity_monotone_in_amplitude(cfg):
    arr = stim_array(cfg)
    scores = [
        perceive(arr, stim_params(amplitude_ma=a), FingerZone.VENTRAL).intensity_score
        for a in (0.5, 1.0, 2.0, 3.5, 5.0)
    ]
    assert all(b > a for a, b in zip(scores, scores[1:]))


def test_zone_sensitivity_ordering(cfg):
    arr = stim_array(cfg)
    p = stim_params(amplitude_ma=2.0)
    score = {z: perceive(arr, p, z).intensity_score for z in FingerZone}
    assert score[FingerZone.FINGERTIP] > score[FingerZone.VENTRAL]
    assert score[FingerZone.VENTRAL] > score[FingerZone.BOTTOM]
    assert score[FingerZone.BOTTOM] > score[FingerZone.LEFT]
    assert score[FingerZone.LEFT] == score[FingerZone.RIGHT]


def test_sensitivity_table_values():
    assert SENSITIVITY[FingerZone.FINGERTIP] == 1.0
    assert SENSITIVITY[FingerZone.VENTRAL] == 0.85
    assert SENSITIVITY[FingerZone.BOTTOM] == 0.7
    assert SENSITIVITY[FingerZone.LEFT] == 0.55
    assert SENSITIVITY[FingerZone.RIGHT] == 0.55


def test_perceive_is_pure(cfg):
    arr = stim_array(cfg)
    p = stim_params()
    a = perceive(arr, p, FingerZone.BOTTOM)
    b = perceive(arr, p, FingerZone.BOTTOM)
    assert a == b


# --- power -------------------------------------------------------------------


def test_startup_draw_then_static(cfg):
    state = initial_power(cfg)
    assert state.mode is PowerMode.STARTUP
    assert state.draw_ma == 250.0
    state = step_power(state, 100.0, cfg)
    assert state.mode is PowerMode.STARTUP
    assert state.draw_ma == 250.0
    state = step_power(state, cfg.power.boot_ms, cfg)
    assert state.mode is PowerMode.IDLE
    assert state.draw_ma == 130.0


def test_active_and_idle_draw_the_static_figure(cfg):
    state = initial_power(cfg)
    state = step_power(state, cfg.power.boot_ms + 1, cfg)
    active = step_power(state, 10.0, cfg, stimulating=True)
    assert active.mode is PowerMode.ACTIVE
    assert active.draw_ma == 130.0
    idle = step_power(active, 10.0, cfg, stimulating=False)
    assert idle.mode is PowerMode.IDLE
    assert idle.draw_ma == 130.0


def test_draw_only_takes_two_values(cfg):
    state = initial_power(cfg)
    seen = {state.draw_ma}
    rng = np.random.default_rng(2)
    for _ in range(200):
        state = step_power(state, float(rng.uniform(1, 200)), cfg, stimulating=bool(rng.integers(2)))
        seen.add(state.draw_ma)
    assert seen == {130.0, 250.0}
