"""Tactile frame container and the .vetf fixture format.

A frame is a single luminance image of the membrane underside. Pixels are
float32 in [0, 1] in memory; fixtures on disk store one byte per pixel with
a small fixed header so other tools (and the tests) can read them without
this package.

Fixture layout, all little-endian:

    offset  size  field
    0       4     magic b"VETF"
    4       2     width  (u16)
    6       2     height (u16)
    8       4     frame sequence number (u32)
    12      4     reserved, zero (u32)
    16      w*h   luminance bytes, row-major

Each fixture may carry a text sidecar (same name + ".txt") with the
parameters that generated it.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

FIXTURE_MAGIC = b"VETF"
_HEADER = struct.Struct("<4sHHII")


class FixtureError(ValueError):
    pass


@dataclass
class TactileFrame:
    """One membrane image with its capture metadata."""

    seq: int
    t_us: int
    pixels: np.ndarray  # float32, shape (height, width), values in [0, 1]

    def __post_init__(self) -> None:
        px = np.asarray(self.pixels, dtype=np.float32)
        if px.ndim != 2:
            raise ValueError("frame pixels must be a 2-D array")
        self.pixels = px

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def quantized(self) -> np.ndarray:
        """Pixels as the u8 image that goes on the wire and into fixtures."""
        return np.clip(np.rint(self.pixels * 255.0), 0, 255).astype(np.uint8)

    @classmethod
    def from_quantized(cls, seq: int, t_us: int, data: np.ndarray) -> "TactileFrame":
        return cls(seq=seq, t_us=t_us, pixels=data.astype(np.float32) / 255.0)


def write_fixture(path: str | Path, frame: TactileFrame, sidecar: str | None = None) -> None:
    path = Path(path)
    q = frame.quantized()
    header = _HEADER.pack(FIXTURE_MAGIC, frame.width, frame.height, frame.seq, 0)
    path.write_bytes(header + q.tobytes())
    if sidecar is not None:
        path.with_suffix(path.suffix + ".txt").write_text(sidecar)


def read_fixture(path: str | Path) -> TactileFrame:
    blob = Path(path).read_bytes()
    if len(blob) < _HEADER.size:
        raise FixtureError(f"{path}: truncated header ({len(blob)} bytes)")
    magic, width, height, seq, reserved = _HEADER.unpack_from(blob)
    if magic != FIXTURE_MAGIC:
        raise FixtureError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + width * height
    if len(blob) != expected:
        raise FixtureError(f"{path}: expected {expected} bytes, got {len(blob)}")
    data = np.frombuffer(blob, dtype=np.uint8, offset=_HEADER.size).reshape(height, width)
    # t_us is not stored in fixtures; readers that care use the sidecar
    return TactileFrame.from_quantized(seq, 0, data.copy())
