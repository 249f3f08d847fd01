"""Dynamic editing: move point-cloud segments so their renders follow 2D
bounding-box tracks, giving a static background with moving objects.

Transforms are translation-only. The object's camera depth stays at its
frame-0 median unless the track supplies an explicit depth per frame.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import EmptySegment, OverlappingSegments
from .geometry import CameraPose, Intrinsics, Trajectory, project_points
from .pointmap import PointCloud

EDIT_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class EditTrack:
    object_id: str
    boxes: np.ndarray  # (L, 4) float, (x_min, y_min, x_max, y_max) pixels
    depth_track: Optional[np.ndarray] = None  # (L,) meters

    def __post_init__(self):
        boxes = np.asarray(self.boxes, dtype=float).reshape(-1, 4)
        object.__setattr__(self, "boxes", boxes)
        if np.any(boxes[:, 0] >= boxes[:, 2]) or np.any(boxes[:, 1] >= boxes[:, 3]):
            raise ValueError("boxes must satisfy x_min < x_max and y_min < y_max")
        if self.depth_track is not None:
            dt = np.asarray(self.depth_track, dtype=float).reshape(-1)
            if dt.shape[0] != boxes.shape[0]:
                raise ValueError("depth_track length must match boxes")
            object.__setattr__(self, "depth_track", dt)


@dataclass(frozen=True)
class ObjectSegment:
    point_indices: np.ndarray  # indices into the PointCloud
    centroid: np.ndarray  # (3,) world
    median_depth0: float  # camera depth at frame 0


def box_center(box: np.ndarray) -> np.ndarray:
    return np.array([(box[0] + box[2]) / 2.0, (box[1] + box[3]) / 2.0])


def select_object_points(
    cloud: PointCloud,
    pose0: CameraPose,
    intr: Intrinsics,
    box0: np.ndarray,
) -> ObjectSegment:
    """Points projecting inside box0 at frame 0, depth-filtered by
    median +/- 1.5 IQR to reject background seen through the box."""
    uv, z = project_points(cloud.positions.astype(np.float64), pose0, intr)
    inside = (
        (z > 0)
        & (uv[:, 0] >= box0[0])
        & (uv[:, 0] <= box0[2])
        & (uv[:, 1] >= box0[1])
        & (uv[:, 1] <= box0[3])
    )
    idx = np.nonzero(inside)[0]
    if idx.size == 0:
        raise EmptySegment("no cloud points project inside the frame-0 box")
    depths = z[idx]
    med = np.median(depths)
    q1, q3 = np.percentile(depths, [25, 75])
    iqr = q3 - q1
    keep = (depths >= med - 1.5 * iqr) & (depths <= med + 1.5 * iqr)
    idx = idx[keep]
    if idx.size == 0:
        raise EmptySegment("depth filtering removed every in-box point")
    return ObjectSegment(
        point_indices=idx,
        centroid=cloud.positions[idx].astype(np.float64).mean(axis=0),
        median_depth0=float(np.median(z[idx])),
    )


def compute_object_transform(
    seg: ObjectSegment,
    box_t: np.ndarray,
    pose_t: CameraPose,
    intr: Intrinsics,
    depth_t: Optional[float] = None,
) -> np.ndarray:
    """World translation putting the segment centroid at the box center.

    The target is the back-projection of the box center at camera depth
    depth_t (frame-0 median depth when absent).
    """
    d = seg.median_depth0 if depth_t is None else float(depth_t)
    cx, cy = box_center(np.asarray(box_t, dtype=float))
    xc = np.array(
        [(cx - intr.width / 2.0) * d / intr.f, (cy - intr.height / 2.0) * d / intr.f, d]
    )
    target = pose_t.R.T @ (xc - pose_t.T)
    return target - seg.centroid


def precompute_segments(
    cloud: PointCloud,
    edits: Sequence[EditTrack],
    pose0: CameraPose,
    intr: Intrinsics,
) -> dict[str, ObjectSegment]:
    """Frame-0 segment extraction for each track; rejects overlapping claims."""
    segments: dict[str, ObjectSegment] = {}
    claimed = np.zeros(len(cloud), dtype=bool)
    for track in edits:
        seg = select_object_points(cloud, pose0, intr, track.boxes[0])
        if np.any(claimed[seg.point_indices]):
            raise OverlappingSegments(
                f"track {track.object_id!r} claims points already owned by another track"
            )
        claimed[seg.point_indices] = True
        segments[track.object_id] = seg
    return segments


def apply_edits(
    cloud: PointCloud,
    edits: Sequence[EditTrack],
    t: int,
    traj: Trajectory,
    segments: Optional[dict[str, ObjectSegment]] = None,
) -> PointCloud:
    """Copy of the cloud with each object's points moved by its frame-t
    translation; background points untouched.

    The translation is the frame-t target minus the frame-0 target, so a
    track whose boxes never move under a static camera is an exact no-op
    (the object is never snapped to its own frame-0 box center).
    """
    if segments is None:
        segments = precompute_segments(cloud, edits, traj.poses[0], traj.intrinsics)
    positions = cloud.positions.astype(np.float64).copy()
    for track in edits:
        if t >= track.boxes.shape[0]:
            raise ValueError(
                f"track {track.object_id!r} has no box for frame {t}"
            )
        seg = segments[track.object_id]
        depth_t = track.depth_track[t] if track.depth_track is not None else None
        depth_0 = track.depth_track[0] if track.depth_track is not None else None
        delta_t = compute_object_transform(
            seg, track.boxes[t], traj.poses[t], traj.intrinsics, depth_t
        )
        delta_0 = compute_object_transform(
            seg, track.boxes[0], traj.poses[0], traj.intrinsics, depth_0
        )
        positions[seg.point_indices] += delta_t - delta_0
    return PointCloud(
        positions=positions,
        colors=cloud.colors,
        source_pixels=cloud.source_pixels,
    )


# --- JSON serialization -----------------------------------------------------------

def track_to_dict(track: EditTrack) -> dict:
    d = {
        "object_id": track.object_id,
        "boxes": [[float(x) for x in box] for box in track.boxes],
    }
    if track.depth_track is not None:
        d["depth_track"] = [float(x) for x in track.depth_track]
    return d


def track_from_dict(d: dict) -> EditTrack:
    return EditTrack(
        object_id=d["object_id"],
        boxes=np.array(d["boxes"], dtype=float),
        depth_track=(
            np.array(d["depth_track"], dtype=float) if d.get("depth_track") else None
        ),
    )


def save_tracks(tracks: Sequence[EditTrack], path: str | Path) -> None:
    payload = {
        "schema_version": EDIT_SCHEMA_VERSION,
        "tracks": [track_to_dict(t) for t in tracks],
    }
    Path(path).write_text(json.dumps(payload, indent=2))


def load_tracks(path: str | Path) -> list[EditTrack]:
    payload = json.loads(Path(path).read_text())
    return [track_from_dict(d) for d in payload["tracks"]]
