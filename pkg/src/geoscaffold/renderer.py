"""Z-buffered projective rendering of colored point clouds.

Each point projects to real-valued (u, v); its splat covers the
(2r+1) x (2r+1) pixel square centered at (floor(u+0.5), floor(v+0.5)),
clipped to the image. Per pixel the nearest-depth covering point wins;
exact depth ties go to the lowest point index, which makes frames
bitwise deterministic.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
from PIL import Image

from .geometry import CameraPose, Intrinsics, Trajectory
from .pointmap import PointCloud

INVALID_DEPTH = np.inf


@dataclass(frozen=True)
class RenderOptions:
    splat_radius: int = 0
    depth_min: float = 0.1
    depth_max: float = 100.0

    def __post_init__(self):
        if self.splat_radius < 0:
            raise ValueError("splat_radius must be >= 0")
        if not 0.0 < self.depth_min < self.depth_max:
            raise ValueError("require 0 < depth_min < depth_max")


@dataclass(frozen=True)
class RenderedFrame:
    rgb: np.ndarray  # (H, W, 3) uint8
    valid: np.ndarray  # (H, W) bool
    depth: np.ndarray  # (H, W) float32, +inf where invalid


def render_frame(
    cloud: PointCloud,
    pose: CameraPose,
    intr: Intrinsics,
    opts: RenderOptions = RenderOptions(),
) -> RenderedFrame:
    H, W = intr.height, intr.width
    rgb = np.zeros((H, W, 3), dtype=np.uint8)
    depth = np.full((H, W), INVALID_DEPTH, dtype=np.float32)
    valid = np.zeros((H, W), dtype=bool)
    if len(cloud) == 0:
        return RenderedFrame(rgb=rgb, valid=valid, depth=depth)

    pc = cloud.positions.astype(np.float64) @ pose.R.T + pose.T
    z = pc[:, 2]
    keep = (z >= opts.depth_min) & (z <= opts.depth_max)
    idx = np.nonzero(keep)[0]
    if idx.size == 0:
        return RenderedFrame(rgb=rgb, valid=valid, depth=depth)

    zk = z[idx]
    u = intr.f * pc[idx, 0] / zk + W / 2.0
    v = intr.f * pc[idx, 1] / zk + H / 2.0
    ci = np.floor(u + 0.5).astype(np.int64)
    ri = np.floor(v + 0.5).astype(np.int64)

    r = opts.splat_radius
    pix_list, z_list, idx_list = [], [], []
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            rr = ri + dy
            cc = ci + dx
            inb = (rr >= 0) & (rr < H) & (cc >= 0) & (cc < W)
            pix_list.append(rr[inb] * W + cc[inb])
            z_list.append(zk[inb])
            idx_list.append(idx[inb])
    pix = np.concatenate(pix_list)
    if pix.size == 0:
        return RenderedFrame(rgb=rgb, valid=valid, depth=depth)
    zs = np.concatenate(z_list)
    ids = np.concatenate(idx_list)

    # sort by pixel, then depth, then original point index; first entry
    # per pixel is the winner
    order = np.lexsort((ids, zs, pix))
    pix_sorted = pix[order]
    first = np.empty(pix_sorted.shape, dtype=bool)
    first[0] = True
    first[1:] = pix_sorted[1:] != pix_sorted[:-1]
    win = order[first]

    flat_pix = pix[win]
    rgb.reshape(-1, 3)[flat_pix] = cloud.colors[ids[win]]
    depth.reshape(-1)[flat_pix] = zs[win].astype(np.float32)
    valid.reshape(-1)[flat_pix] = True
    return RenderedFrame(rgb=rgb, valid=valid, depth=depth)


def render_sequence(
    cloud: PointCloud,
    traj: Trajectory,
    edits: Optional[Sequence] = None,
    opts: RenderOptions = RenderOptions(),
) -> list[RenderedFrame]:
    """Render the cloud at every trajectory pose, applying edits per frame.

    Without edits the scene is static across frames. Edit tracks must
    cover every frame of the trajectory.
    """
    if edits:
        from .dynamic_edit import apply_edits, precompute_segments

        segments = precompute_segments(cloud, edits, traj.poses[0], traj.intrinsics)
        frames = []
        for t in range(len(traj)):
            edited = apply_edits(cloud, edits, t, traj, segments=segments)
            frames.append(render_frame(edited, traj.poses[t], traj.intrinsics, opts))
        return frames
    return [render_frame(cloud, pose, traj.intrinsics, opts) for pose in traj.poses]


# --- frame export ----------------------------------------------------------------

def save_frame(frame: RenderedFrame, directory: str | Path, index: int) -> None:
    """Write rgb.png (RGB), valid.png (1-bit), depth.bin for one frame.

    depth.bin layout: u32 width, u32 height (little-endian), then
    H*W float32 little-endian depths, +inf where invalid.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    Image.fromarray(frame.rgb, mode="RGB").save(directory / f"{index:04d}.png")
    Image.fromarray(frame.valid).convert("1").save(
        directory / f"{index:04d}.valid.png"
    )
    h, w = frame.depth.shape
    with open(directory / f"{index:04d}.depth.bin", "wb") as f:
        f.write(struct.pack("<II", w, h))
        f.write(np.ascontiguousarray(frame.depth, dtype="<f4").tobytes())


def load_depth(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    w, h = struct.unpack("<II", data[:8])
    return np.frombuffer(data, dtype="<f4", count=h * w, offset=8).reshape(h, w).copy()
