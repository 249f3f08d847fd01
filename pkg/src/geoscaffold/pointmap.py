"""GPM1 point-map container and confidence-thresholded point clouds.

A point map stores, for one reference frame, per-pixel world coordinates,
a confidence score in [0, 1], RGB color, and optionally a static/dynamic
mask. The on-disk format is a single little-endian binary file:

    magic "GPM1" (4 bytes)
    width  (u32)
    height (u32)
    flags  (u8, bit 0 = static_mask present)
    positions   H*W*3 float32, row-major, meters, world frame
    confidence  H*W   float32
    rgb         H*W*3 u8
    static_mask H*W   u8 (0/1), only if flags bit 0 set
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import (
    BadMagic,
    DimensionMismatch,
    IoFailure,
    NonFiniteValue,
    TruncatedFile,
)

MAGIC = b"GPM1"
HEADER_SIZE = 13  # magic + u32 + u32 + u8
DEFAULT_TAU = 0.65


@dataclass(frozen=True)
class PointMap:
    """Per-pixel world geometry for one reference frame."""

    width: int
    height: int
    positions: np.ndarray  # (H, W, 3) float32, meters
    confidence: np.ndarray  # (H, W) float32 in [0, 1]
    rgb: np.ndarray  # (H, W, 3) uint8
    static_mask: Optional[np.ndarray] = None  # (H, W) bool, True = static

    def validate(self) -> None:
        h, w = self.height, self.width
        if self.positions.shape != (h, w, 3):
            raise DimensionMismatch(
                f"positions shape {self.positions.shape} != {(h, w, 3)}"
            )
        if self.confidence.shape != (h, w):
            raise DimensionMismatch(
                f"confidence shape {self.confidence.shape} != {(h, w)}"
            )
        if self.rgb.shape != (h, w, 3):
            raise DimensionMismatch(f"rgb shape {self.rgb.shape} != {(h, w, 3)}")
        if self.static_mask is not None and self.static_mask.shape != (h, w):
            raise DimensionMismatch(
                f"static_mask shape {self.static_mask.shape} != {(h, w)}"
            )
        if not np.all(np.isfinite(self.positions)):
            raise NonFiniteValue("positions contain non-finite values")
        if not np.all(np.isfinite(self.confidence)):
            raise NonFiniteValue("confidence contains non-finite values")
        if self.confidence.size and (
            self.confidence.min() < 0.0 or self.confidence.max() > 1.0
        ):
            raise NonFiniteValue("confidence values outside [0, 1]")


@dataclass(frozen=True)
class PointCloud:
    """Confidence-filtered colored points, in row-major source-pixel order."""

    positions: np.ndarray  # (N, 3) float64, meters
    colors: np.ndarray  # (N, 3) uint8
    source_pixels: np.ndarray  # (N, 2) int32, (row, col)

    def __len__(self) -> int:
        return self.positions.shape[0]


def save_pointmap(pm: PointMap, path: str | Path) -> None:
    """Write ``pm`` to ``path`` in the GPM1 format. Round-trips bit-exactly."""
    pm.validate()
    flags = 1 if pm.static_mask is not None else 0
    try:
        with open(path, "wb") as f:
            f.write(MAGIC)
            f.write(struct.pack("<IIB", pm.width, pm.height, flags))
            f.write(np.ascontiguousarray(pm.positions, dtype="<f4").tobytes())
            f.write(np.ascontiguousarray(pm.confidence, dtype="<f4").tobytes())
            f.write(np.ascontiguousarray(pm.rgb, dtype=np.uint8).tobytes())
            if pm.static_mask is not None:
                f.write(
                    np.ascontiguousarray(pm.static_mask, dtype=np.uint8).tobytes()
                )
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


def load_pointmap(path: str | Path) -> PointMap:
    """Read and validate a GPM1 file."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoFailure(str(exc)) from exc

    if len(data) < HEADER_SIZE:
        if data[:4] != MAGIC and len(data) >= 4:
            raise BadMagic(f"expected {MAGIC!r}, got {data[:4]!r}")
        raise TruncatedFile(f"file is {len(data)} bytes, header needs {HEADER_SIZE}")
    if data[:4] != MAGIC:
        raise BadMagic(f"expected {MAGIC!r}, got {data[:4]!r}")

    width, height, flags = struct.unpack("<IIB", data[4:HEADER_SIZE])
    has_mask = bool(flags & 1)
    n = width * height
    expected = HEADER_SIZE + n * (12 + 4 + 3) + (n if has_mask else 0)
    if len(data) < expected:
        raise TruncatedFile(f"file is {len(data)} bytes, expected {expected}")
    if len(data) > expected:
        raise DimensionMismatch(
            f"file is {len(data)} bytes, expected exactly {expected}"
        )

    off = HEADER_SIZE
    positions = np.frombuffer(data, dtype="<f4", count=3 * n, offset=off)
    positions = positions.reshape(height, width, 3).copy()
    off += 12 * n
    confidence = np.frombuffer(data, dtype="<f4", count=n, offset=off)
    confidence = confidence.reshape(height, width).copy()
    off += 4 * n
    rgb = np.frombuffer(data, dtype=np.uint8, count=3 * n, offset=off)
    rgb = rgb.reshape(height, width, 3).copy()
    off += 3 * n
    static_mask = None
    if has_mask:
        static_mask = (
            np.frombuffer(data, dtype=np.uint8, count=n, offset=off)
            .reshape(height, width)
            .astype(bool)
        )

    pm = PointMap(
        width=width,
        height=height,
        positions=positions,
        confidence=confidence,
        rgb=rgb,
        static_mask=static_mask,
    )
    pm.validate()
    return pm


def threshold_cloud(pm: PointMap, tau: float = DEFAULT_TAU) -> PointCloud:
    """Keep exactly the pixels with confidence strictly greater than ``tau``.

    Points come out in row-major pixel order, which fixes the point indices
    used by the renderer's depth tie-break.
    """
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    keep = pm.confidence > tau
    rows, cols = np.nonzero(keep)
    return PointCloud(
        positions=pm.positions[rows, cols].astype(np.float64),
        colors=pm.rgb[rows, cols],
        source_pixels=np.stack([rows, cols], axis=1).astype(np.int32),
    )
