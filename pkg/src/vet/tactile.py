"""Perception pipeline over membrane images.

Contact darkens the image where the gel thins and brightens a ring where
displaced material piles up. Starting from a reference captured with
nothing touching the sensor, this module finds contact, inverts the
intensity deficit back into indentation depth, tracks inter-frame motion
with block matching, and folds depth plus motion into a force proxy.

All functions are pure; callers own frame ordering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage

from .config import VetConfig
from .frames import TactileFrame
from .zones import FingerZone


@dataclass(frozen=True)
class DepthCalibration:
    """Monotone piecewise-linear map from intensity deficit to depth (mm)."""

    deficit_knots: tuple[float, ...]
    depth_knots_mm: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.deficit_knots) != len(self.depth_knots_mm) or len(self.deficit_knots) < 2:
            raise ValueError("calibration needs at least two matched knots")
        if any(b <= a for a, b in zip(self.deficit_knots, self.deficit_knots[1:])):
            raise ValueError("deficit knots must be strictly increasing")

    def apply(self, deficit: np.ndarray) -> np.ndarray:
        # brighter-than-reference pixels are the bulge ring, not indentation
        return np.interp(np.maximum(deficit, 0.0), self.deficit_knots, self.depth_knots_mm)


def default_calibration(cfg: VetConfig) -> DepthCalibration:
    """Linear deficit->depth map implied by the membrane config."""
    full = cfg.membrane.indentation_gain * cfg.membrane.depth_cap_mm
    return DepthCalibration(
        deficit_knots=(0.0, full),
        depth_knots_mm=(0.0, cfg.membrane.depth_cap_mm),
    )


@dataclass(frozen=True)
class ReferenceModel:
    """No-contact appearance of the sensor: per-pixel baseline plus noise level."""

    baseline: np.ndarray  # float64, (h, w)
    noise_sigma: float
    calib: DepthCalibration


def set_reference(frames: Sequence[TactileFrame], cfg: VetConfig) -> ReferenceModel:
    """Build the reference from one or more no-contact frames.

    Baseline is the per-pixel mean; the noise level is the per-pixel sample
    standard deviation averaged over the sensor (zero for a single frame).
    """
    if not frames:
        raise ValueError("need at least one reference frame")
    shape = frames[0].pixels.shape
    for f in frames[1:]:
        if f.pixels.shape != shape:
            raise ValueError("reference frames have mismatched dimensions")
    stack = np.stack([f.pixels.astype(np.float64) for f in frames])
    baseline = stack.mean(axis=0)
    sigma = 0.0 if len(frames) == 1 else float(stack.std(axis=0, ddof=1).mean())
    return ReferenceModel(baseline=baseline, noise_sigma=sigma, calib=default_calibration(cfg))


@dataclass(frozen=True)
class ForceEstimate:
    normal: float
    shear: tuple[float, float]
    direction_rad: float


@dataclass(frozen=True)
class ContactPatch:
    """Connected contact evidence on one frame."""

    mask: np.ndarray  # bool, (h, w)
    centroid: tuple[float, float]  # (x, y) px
    area_px: int
    depth_mm: np.ndarray  # float64, (h, w)
    force: ForceEstimate


def detect_contact(
    frame: TactileFrame, ref: ReferenceModel, cfg: VetConfig
) -> ContactPatch | None:
    """Find contact on a frame, or None when nothing credible deviates.

    A pixel counts when it deviates from baseline by more than k noise
    sigmas plus an absolute floor. Specks smaller than the configured
    minimum area are removed; if nothing remains there is no contact.
    """
    if frame.pixels.shape != ref.baseline.shape:
        raise ValueError("frame dimensions do not match the reference")
    dev = frame.pixels.astype(np.float64) - ref.baseline
    threshold = cfg.contact.k_sigma * ref.noise_sigma + cfg.contact.abs_threshold
    mask = np.abs(dev) > threshold
    mask = _drop_specks(mask, cfg.contact.min_area_px)
    area = int(mask.sum())
    if area < cfg.contact.min_area_px:
        return None
    ys, xs = np.nonzero(mask)
    centroid = (float(xs.mean()), float(ys.mean()))
    depth = reconstruct_depth(frame, ref)
    force = estimate_force(depth, None, cfg)
    return ContactPatch(mask=mask, centroid=centroid, area_px=area, depth_mm=depth, force=force)


def _drop_specks(mask: np.ndarray, min_area: int) -> np.ndarray:
    if not mask.any():
        return mask
    labels, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    if n == 0:
        return mask
    sizes = ndimage.sum_labels(mask, labels, index=np.arange(1, n + 1))
    keep = np.flatnonzero(sizes >= min_area) + 1
    return np.isin(labels, keep)


def reconstruct_depth(frame: TactileFrame, ref: ReferenceModel) -> np.ndarray:
    """Indentation depth map (mm) from the intensity deficit.

    Darker than baseline maps through the calibration curve; brighter than
    baseline (the bulge ring) clamps to zero depth.
    """
    if frame.pixels.shape != ref.baseline.shape:
        raise ValueError("frame dimensions do not match the reference")
    deficit = ref.baseline - frame.pixels.astype(np.float64)
    depth = ref.calib.apply(deficit)
    np.maximum(depth, 0.0, out=depth)
    return depth


@dataclass(frozen=True)
class FlowVector:
    x: float  # block center, px
    y: float
    dx: float
    dy: float
    confidence: float


@dataclass(frozen=True)
class FlowField:
    vectors: tuple[FlowVector, ...]
    mean_flow: tuple[float, float]
    confidence: float


def estimate_flow(prev: TactileFrame, curr: TactileFrame, cfg: VetConfig) -> FlowField:
    """Block-matching flow from prev to curr.

    Each textured block is matched by sum-of-absolute-differences over a
    square search window; ties prefer the smallest displacement so still
    scenes read as still. A parabolic fit around the best integer match
    refines to subpixel, skipped when the match is already exact. Block
    confidence comes from the margin between the best match and the best
    clearly-different alternative; the field mean is confidence weighted.
    """
    if prev.pixels.shape != curr.pixels.shape:
        raise ValueError("frame dimensions differ")
    block = cfg.flow.block_px
    r = cfg.flow.search_radius_px
    p = prev.pixels.astype(np.float64)
    c = curr.pixels.astype(np.float64)
    h, w = p.shape
    if h < block + 2 * r or w < block + 2 * r:
        return FlowField(vectors=(), mean_flow=(0.0, 0.0), confidence=0.0)

    span = 2 * r + 1
    offs = np.arange(-r, r + 1)
    dygrid, dxgrid = np.meshgrid(offs, offs, indexing="ij")
    d2grid = dygrid * dygrid + dxgrid * dxgrid
    # chebyshev distance from every candidate to every other, for the margin
    vectors: list[FlowVector] = []
    for by in range(r, h - block - r + 1, block):
        for bx in range(r, w - block - r + 1, block):
            tile = p[by : by + block, bx : bx + block]
            if float(tile.max() - tile.min()) < cfg.flow.activity_floor:
                continue
            region = c[by - r : by + block + r, bx - r : bx + block + r]
            windows = sliding_window_view(region, (block, block))
            sad = np.abs(windows - tile).sum(axis=(2, 3))
            best_iy, best_ix, best = _lexi_min(sad, d2grid, dygrid, dxgrid)
            margin_pool = sad[
                np.maximum(np.abs(dygrid - (best_iy - r)), np.abs(dxgrid - (best_ix - r))) >= 2
            ]
            second = float(margin_pool.min()) if margin_pool.size else float("inf")
            if second <= 0.0:
                continue  # indistinguishable from its surroundings
            conf = max(0.0, 1.0 - best / second) if math.isfinite(second) else 1.0
            if conf <= 0.0:
                continue
            dx = float(best_ix - r) + _parabolic_offset(sad[best_iy, :], best_ix, best)
            dy = float(best_iy - r) + _parabolic_offset(sad[:, best_ix], best_iy, best)
            vectors.append(
                FlowVector(
                    x=bx + block / 2.0,
                    y=by + block / 2.0,
                    dx=dx,
                    dy=dy,
                    confidence=conf,
                )
            )
    if not vectors:
        return FlowField(vectors=(), mean_flow=(0.0, 0.0), confidence=0.0)
    weight = sum(v.confidence for v in vectors)
    mean = (
        sum(v.dx * v.confidence for v in vectors) / weight,
        sum(v.dy * v.confidence for v in vectors) / weight,
    )
    return FlowField(
        vectors=tuple(vectors),
        mean_flow=mean,
        confidence=weight / len(vectors),
    )


def _lexi_min(
    sad: np.ndarray, d2: np.ndarray, dys: np.ndarray, dxs: np.ndarray
) -> tuple[int, int, float]:
    """Index of the smallest SAD, ties broken toward the smallest shift."""
    best = float(sad.min())
    tied = np.nonzero(sad == best)
    order = np.lexsort((dxs[tied], dys[tied], d2[tied]))
    k = order[0]
    return int(tied[0][k]), int(tied[1][k]), best


def _parabolic_offset(line: np.ndarray, i: int, best: float) -> float:
    """Subpixel offset along one axis; zero when refinement is unjustified."""
    if best <= 0.0 or i <= 0 or i >= len(line) - 1:
        return 0.0
    a, b, cc = float(line[i - 1]), float(line[i]), float(line[i + 1])
    denom = a - 2.0 * b + cc
    if denom <= 0.0:
        return 0.0
    return float(np.clip((a - cc) / (2.0 * denom), -0.5, 0.5))


def estimate_force(
    depth_mm: np.ndarray, flow: FlowField | None, cfg: VetConfig
) -> ForceEstimate:
    """Normal force from total indentation, shear from mean flow."""
    normal = cfg.force.normal_gain * float(np.sum(depth_mm))
    if flow is None:
        shear = (0.0, 0.0)
    else:
        shear = (
            cfg.force.shear_gain * flow.mean_flow[0],
            cfg.force.shear_gain * flow.mean_flow[1],
        )
    direction = math.atan2(shear[1], shear[0]) if (shear[0] or shear[1]) else 0.0
    return ForceEstimate(normal=normal, shear=shear, direction_rad=direction)


def classify_zone(patch: ContactPatch, zones: np.ndarray) -> FingerZone:
    """Finger zone at the patch centroid; the zone map is a total partition."""
    h, w = zones.shape
    x, y = patch.centroid
    if not (0 <= x < w and 0 <= y < h):
        raise ValueError(f"patch centroid {patch.centroid} outside the sensing area")
    return zones[min(int(round(y)), h - 1), min(int(round(x)), w - 1)]
