"""Fingertip zone geometry.

The sensing area maps onto five regions of the finger pad. Perceived
stimulation strength differs by region: the tip and the central pad carry
the densest innervation, the sides the sparsest. ``zone_map`` rasterizes
the regions onto the sensor grid; everything else derives from that map.
"""

from __future__ import annotations

from enum import Enum

import numpy as np


class FingerZone(Enum):
    FINGERTIP = "fingertip"
    BOTTOM = "bottom"
    LEFT = "left"
    RIGHT = "right"
    VENTRAL = "ventral"


# relative perceived intensity per unit of delivered charge; ordered scores,
# tip and central pad on top, the lateral flanks equal and lowest
SENSITIVITY = {
    FingerZone.FINGERTIP: 1.0,
    FingerZone.VENTRAL: 0.85,
    FingerZone.BOTTOM: 0.7,
    FingerZone.LEFT: 0.55,
    FingerZone.RIGHT: 0.55,
}

# the tight lateral strip near the nail fold is folded into RIGHT
_ZONE_ALIASES = {"tight": FingerZone.RIGHT}


def parse_zone(name: str) -> FingerZone:
    key = name.strip().lower()
    if key in _ZONE_ALIASES:
        return _ZONE_ALIASES[key]
    try:
        return FingerZone(key)
    except ValueError:
        raise ValueError(f"unknown finger zone: {name!r}") from None


def zone_map(width: int, height: int) -> np.ndarray:
    """Zone id per pixel, shape (height, width), dtype object of FingerZone.

    Regions, in claim order: a disc around the tip, the bottom band, the
    left and right margins, and the central (ventral) pad for the rest.
    """
    ys, xs = np.mgrid[0:height, 0:width]
    zones = np.full((height, width), FingerZone.VENTRAL, dtype=object)
    zones[xs < width // 4] = FingerZone.LEFT
    zones[xs >= (3 * width) // 4] = FingerZone.RIGHT
    zones[ys >= (3 * height) // 4] = FingerZone.BOTTOM
    cx, cy = width / 2.0, height / 4.0
    r = min(width, height) / 4.0
    tip = (xs - cx) ** 2 + (ys - cy) ** 2 <= r * r
    zones[tip] = FingerZone.FINGERTIP
    return zones


def zone_of(width: int, height: int, x: float, y: float) -> FingerZone:
    xi = int(np.clip(round(x), 0, width - 1))
    yi = int(np.clip(round(y), 0, height - 1))
    return zone_map(width, height)[yi, xi]


def zone_center(width: int, height: int, zone: FingerZone) -> tuple[float, float]:
    """Centroid of a zone's pixels; where synthetic presses for it land."""
    zm = zone_map(width, height)
    mask = zm == zone
    ys, xs = np.nonzero(mask)
    return float(xs.mean()), float(ys.mean())
