"""Deterministic synthetic scenes with an analytic ray-cast renderer.

The scene is a checker-textured ground plane (y = 0, +y pointing down in
camera convention, so the camera sits at negative y), a handful of
axis-aligned colored cuboids, and one dynamic cuboid translating at a
constant per-frame velocity. The analytic renderer is the ground-truth
counterpart of the point-splatting rasterizer and is deliberately a
different algorithm (per-pixel ray casting, not point projection).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from .dynamic_edit import EditTrack
from .geometry import DEPTH_MAX, DEPTH_MIN, CameraPose, Intrinsics, Trajectory
from .pointmap import PointMap

SCENE_SCHEMA_VERSION = 1

GROUND_ID = -1
SKY_ID = -2
DYNAMIC_ID = 1000


@dataclass(frozen=True)
class SceneConfig:
    width: int = 96
    height: int = 64
    focal: float = 80.0
    n_frames: int = 16
    n_static_boxes: int = 4
    camera_style: str = "straight"  # straight | curved | reverse
    camera_speed: float = 0.25  # meters per frame
    camera_height: float = 1.5  # meters above the ground plane
    checker_size: float = 2.0  # meters per checker square
    dynamic_velocity: tuple[float, float, float] = (0.2, 0.0, 0.0)
    # taller than the camera height and thin in depth so the camera sees
    # (almost) only the front face — keeps box tracks unambiguous
    dynamic_size: tuple[float, float, float] = (1.6, 1.8, 0.6)
    dynamic_start: tuple[float, float, float] = (-2.5, -0.9, 10.0)

    def intrinsics(self) -> Intrinsics:
        return Intrinsics(f=self.focal, width=self.width, height=self.height)


@dataclass(frozen=True)
class Cuboid:
    lo: np.ndarray  # (3,) min corner, world
    hi: np.ndarray  # (3,) max corner, world
    color: np.ndarray  # (3,) uint8

    @property
    def center(self) -> np.ndarray:
        return (self.lo + self.hi) / 2.0

    def corners(self) -> np.ndarray:
        xs = [self.lo[0], self.hi[0]]
        ys = [self.lo[1], self.hi[1]]
        zs = [self.lo[2], self.hi[2]]
        return np.array([[x, y, z] for x in xs for y in ys for z in zs])


@dataclass(frozen=True)
class SyntheticScene:
    config: SceneConfig
    seed: int
    static_boxes: tuple[Cuboid, ...]
    dynamic_box: Cuboid  # position at frame 0
    checker_colors: tuple[np.ndarray, np.ndarray]
    sky_color: np.ndarray

    def dynamic_box_at(self, t: int) -> Cuboid:
        offset = np.asarray(self.config.dynamic_velocity, dtype=float) * t
        return Cuboid(
            lo=self.dynamic_box.lo + offset,
            hi=self.dynamic_box.hi + offset,
            color=self.dynamic_box.color,
        )


def generate_scene(seed: int, cfg: SceneConfig = SceneConfig()) -> SyntheticScene:
    """Deterministic scene for a given (seed, cfg)."""
    rng = np.random.default_rng(seed)
    palette = np.array(
        [
            [200, 60, 50],
            [60, 160, 220],
            [240, 190, 60],
            [90, 200, 110],
            [180, 90, 200],
            [230, 120, 40],
        ],
        dtype=np.uint8,
    )
    boxes = []
    for k in range(cfg.n_static_boxes):
        side = -1.0 if k % 2 == 0 else 1.0
        x = side * rng.uniform(2.5, 6.0)
        z = rng.uniform(6.0, 26.0)
        w = rng.uniform(1.2, 2.5)
        h = rng.uniform(1.2, 3.0)
        d = rng.uniform(1.5, 3.5)
        lo = np.array([x - w / 2, -h, z - d / 2])
        hi = np.array([x + w / 2, 0.0, z + d / 2])
        boxes.append(Cuboid(lo=lo, hi=hi, color=palette[k % len(palette)]))

    sx, sy, sz = cfg.dynamic_size
    px, py, pz = cfg.dynamic_start
    dyn = Cuboid(
        lo=np.array([px - sx / 2, py - sy / 2, pz - sz / 2]),
        hi=np.array([px + sx / 2, py + sy / 2, pz + sz / 2]),
        color=np.array([250, 250, 250], dtype=np.uint8),
    )
    shade = rng.integers(25, 70, size=2)
    checker = (
        np.array([shade[0]] * 3, dtype=np.uint8),
        np.array([255 - shade[1]] * 3, dtype=np.uint8),
    )
    sky = np.array([135, 195, 235], dtype=np.uint8)
    return SyntheticScene(
        config=cfg,
        seed=seed,
        static_boxes=tuple(boxes),
        dynamic_box=dyn,
        checker_colors=checker,
        sky_color=sky,
    )


# --- trajectory ------------------------------------------------------------------

def _yaw_pose(theta: float, center: np.ndarray) -> CameraPose:
    c, s = math.cos(theta), math.sin(theta)
    R_cam_to_world = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    return CameraPose.from_center(R_cam_to_world.T, center)


def make_trajectory(cfg: SceneConfig) -> Trajectory:
    """Ego path for the configured camera style, starting at the origin."""
    poses = []
    y = -cfg.camera_height
    for t in range(cfg.n_frames):
        if cfg.camera_style == "straight":
            poses.append(_yaw_pose(0.0, np.array([0.0, y, cfg.camera_speed * t])))
        elif cfg.camera_style == "curved":
            yaw_rate = math.radians(1.5)
            theta = yaw_rate * t
            radius = cfg.camera_speed / yaw_rate if yaw_rate else 0.0
            center = np.array(
                [radius * (1.0 - math.cos(theta)), y, radius * math.sin(theta)]
            )
            poses.append(_yaw_pose(theta, center))
        elif cfg.camera_style == "reverse":
            half = cfg.n_frames // 2
            z = cfg.camera_speed * (t if t < half else 2 * half - t)
            poses.append(_yaw_pose(0.0, np.array([0.0, y, z])))
        else:
            raise ValueError(f"unknown camera style {cfg.camera_style!r}")
    return Trajectory(poses=tuple(poses), intrinsics=cfg.intrinsics())


# --- analytic ray casting ----------------------------------------------------------

def _ray_box(
    origin: np.ndarray, dirs: np.ndarray, box: Cuboid
) -> np.ndarray:
    """Entry parameter t for each ray into the box, +inf when missed."""
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (box.lo[None, :] - origin[None, :]) / dirs
        t2 = (box.hi[None, :] - origin[None, :]) / dirs
    t_near = np.minimum(t1, t2).max(axis=1)
    t_far = np.maximum(t1, t2).min(axis=1)
    hit = (t_near <= t_far) & (t_far > 0) & (t_near > 1e-9)
    return np.where(hit, t_near, np.inf)


def oracle_render(
    scene: SyntheticScene,
    pose: CameraPose,
    intr: Intrinsics,
    frame: int = 0,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact per-pixel ray cast. Returns (rgb uint8, depth, object_id).

    depth is the camera-frame z of the nearest hit (+inf for sky);
    object_id is GROUND_ID / SKY_ID / static box index / DYNAMIC_ID.
    Rays pass through integer pixel coordinates (u = column, v = row),
    matching the rasterizer's projection convention.
    """
    H, W = intr.height, intr.width
    jj, ii = np.meshgrid(np.arange(W), np.arange(H))
    dirs_cam = np.stack(
        [
            (jj.ravel() - W / 2.0) / intr.f,
            (ii.ravel() - H / 2.0) / intr.f,
            np.ones(H * W),
        ],
        axis=1,
    )
    # dir_world = R^T dir_cam; camera depth along each ray equals t because
    # the camera-frame z component of dirs_cam is 1
    dirs_world = dirs_cam @ pose.R
    origin = pose.center

    best_t = np.full(H * W, np.inf)
    obj_id = np.full(H * W, SKY_ID, dtype=np.int64)

    with np.errstate(divide="ignore", invalid="ignore"):
        t_plane = -origin[1] / dirs_world[:, 1]
    plane_hit = (dirs_world[:, 1] != 0) & (t_plane > 1e-9)
    t_plane = np.where(plane_hit, t_plane, np.inf)
    better = t_plane < best_t
    best_t = np.where(better, t_plane, best_t)
    obj_id[better] = GROUND_ID

    boxes = list(scene.static_boxes) + [scene.dynamic_box_at(frame)]
    ids = list(range(len(scene.static_boxes))) + [DYNAMIC_ID]
    for box, bid in zip(boxes, ids):
        t_box = _ray_box(origin, dirs_world, box)
        better = t_box < best_t
        best_t = np.where(better, t_box, best_t)
        obj_id[better] = bid

    rgb = np.empty((H * W, 3), dtype=np.uint8)
    rgb[:] = scene.sky_color
    ground = obj_id == GROUND_ID
    if ground.any():
        hit = origin[None, :] + best_t[ground, None] * dirs_world[ground]
        parity = (
            np.floor(hit[:, 0] / scene.config.checker_size).astype(np.int64)
            + np.floor(hit[:, 2] / scene.config.checker_size).astype(np.int64)
        ) % 2
        rgb[ground] = np.where(
            parity[:, None] == 0,
            scene.checker_colors[0][None, :],
            scene.checker_colors[1][None, :],
        )
    for box, bid in zip(boxes, ids):
        sel = obj_id == bid
        rgb[sel] = box.color

    return (
        rgb.reshape(H, W, 3),
        best_t.reshape(H, W),
        obj_id.reshape(H, W),
    )


# --- exports -----------------------------------------------------------------------

def export_pointmap(
    scene: SyntheticScene, pose0: CameraPose, intr: Intrinsics
) -> PointMap:
    """Back-project the frame-0 oracle render into a GPM1-style point map.

    Geometry hits inside the renderable depth range get confidence 1.0;
    sky and out-of-range hits get 0.0. The static mask is False exactly
    on dynamic-cuboid pixels.
    """
    rgb, depth, obj_id = oracle_render(scene, pose0, intr, frame=0)
    H, W = intr.height, intr.width
    jj, ii = np.meshgrid(np.arange(W), np.arange(H))
    dirs_cam = np.stack(
        [
            (jj - W / 2.0) / intr.f,
            (ii - H / 2.0) / intr.f,
            np.ones((H, W)),
        ],
        axis=-1,
    )
    dirs_world = dirs_cam @ pose0.R
    hits = np.isfinite(depth) & (depth >= DEPTH_MIN) & (depth <= DEPTH_MAX)
    positions = np.zeros((H, W, 3), dtype=np.float32)
    positions[hits] = (
        pose0.center[None, :] + depth[hits, None] * dirs_world[hits]
    ).astype(np.float32)
    return PointMap(
        width=W,
        height=H,
        positions=positions,
        confidence=hits.astype(np.float32),
        rgb=rgb,
        static_mask=(obj_id != DYNAMIC_ID),
    )


def gt_edit_track(scene: SyntheticScene, traj: Trajectory) -> EditTrack:
    """Ground-truth per-frame 2D boxes and depths of the dynamic cuboid.

    Boxes and depths come from the oracle render itself — the tight pixel
    bounding box of the cuboid's rendered pixels and their median depth —
    so the track describes the object's visible surface, the same thing a
    detector (or a point-cloud edit) operates on.
    """
    intr = traj.intrinsics
    boxes = []
    depths = []
    for t, pose in enumerate(traj.poses):
        _, depth, obj_id = oracle_render(scene, pose, intr, frame=t)
        rows, cols = np.nonzero(obj_id == DYNAMIC_ID)
        if rows.size == 0:
            raise ValueError(f"dynamic cuboid not visible at frame {t}")
        boxes.append([cols.min(), rows.min(), cols.max() + 1, rows.max() + 1])
        depths.append(float(np.median(depth[rows, cols])))
    return EditTrack(
        object_id="dynamic-cuboid",
        boxes=np.array(boxes, dtype=float),
        depth_track=np.array(depths),
    )


def oracle_video(scene: SyntheticScene, traj: Trajectory) -> np.ndarray:
    """Ground-truth RGB clip (L, H, W, 3) uint8 with the cuboid in motion."""
    return np.stack(
        [
            oracle_render(scene, pose, traj.intrinsics, frame=t)[0]
            for t, pose in enumerate(traj.poses)
        ]
    )


# --- manifest ------------------------------------------------------------------------

def save_manifest(scene: SyntheticScene, path: str | Path) -> None:
    payload = {
        "schema_version": SCENE_SCHEMA_VERSION,
        "seed": scene.seed,
        "config": asdict(scene.config),
    }
    Path(path).write_text(json.dumps(payload, indent=2))


def load_manifest(path: str | Path) -> SyntheticScene:
    payload = json.loads(Path(path).read_text())
    cfg_dict = payload["config"]
    for key in ("dynamic_velocity", "dynamic_size", "dynamic_start"):
        cfg_dict[key] = tuple(cfg_dict[key])
    return generate_scene(int(payload["seed"]), SceneConfig(**cfg_dict))
