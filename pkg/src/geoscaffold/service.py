"""HTTP service exposing render/edit/metric jobs over the same JSON
schemas the CLI uses.

Jobs run on a bounded FIFO queue with a configurable number of worker
threads (default 1; renders are deterministic and CPU-bound, so serial
execution keeps runs reproducible). Job state lives in an in-memory
registry; frames land in job-scoped directories under the workdir.
"""

from __future__ import annotations

import json
import queue
import threading
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse, Response
from pydantic import BaseModel, Field

from . import dynamic_edit, geometry, metrics, pointmap, renderer, scene_synth

SCHEMA_VERSION = 1


# --- request/response schemas -------------------------------------------------------

class FrameModel(BaseModel):
    R: list[float] = Field(min_length=9, max_length=9)
    T: list[float] = Field(min_length=3, max_length=3)


class TrajectoryModel(BaseModel):
    f: float
    width: int
    height: int
    frames: list[FrameModel] = Field(min_length=1)


class EditTrackModel(BaseModel):
    object_id: str
    boxes: list[list[float]]
    depth_track: Optional[list[float]] = None


class RenderOptionsModel(BaseModel):
    tau: float = 0.65
    splat_radius: int = 0
    depth_min: float = 0.1
    depth_max: float = 100.0


class RenderRequest(BaseModel):
    schema_version: int = SCHEMA_VERSION
    trajectory: TrajectoryModel
    edits: list[EditTrackModel] = Field(default_factory=list)
    options: RenderOptionsModel = Field(default_factory=RenderOptionsModel)


class MetricsRequest(BaseModel):
    schema_version: int = SCHEMA_VERSION
    gt_traj: TrajectoryModel
    pred_traj: TrajectoryModel


class WaypointModel(BaseModel):
    frame: int
    R: list[float] = Field(min_length=9, max_length=9)
    T: list[float] = Field(min_length=3, max_length=3)


class PreviewRequest(BaseModel):
    schema_version: int = SCHEMA_VERSION
    waypoints: list[WaypointModel] = Field(min_length=1)
    n_frames: int = Field(ge=1)


# --- conversion helpers -------------------------------------------------------------

def _trajectory_from_model(m: TrajectoryModel, field_path: str) -> geometry.Trajectory:
    intr = geometry.Intrinsics(f=m.f, width=m.width, height=m.height)
    poses = []
    for i, frame in enumerate(m.frames):
        try:
            pose = geometry.CameraPose(
                np.array(frame.R).reshape(3, 3), np.array(frame.T)
            )
        except ValueError as exc:
            raise _FieldError(f"{field_path}.frames[{i}].R", str(exc)) from exc
        poses.append(pose)
    return geometry.Trajectory(poses=tuple(poses), intrinsics=intr)


def _tracks_from_models(models: list[EditTrackModel]) -> list[dynamic_edit.EditTrack]:
    tracks = []
    for i, m in enumerate(models):
        try:
            tracks.append(
                dynamic_edit.EditTrack(
                    object_id=m.object_id,
                    boxes=np.array(m.boxes, dtype=float),
                    depth_track=(
                        np.array(m.depth_track, dtype=float)
                        if m.depth_track
                        else None
                    ),
                )
            )
        except ValueError as exc:
            raise _FieldError(f"edits[{i}].boxes", str(exc)) from exc
    return tracks


class _FieldError(Exception):
    def __init__(self, field_path: str, message: str):
        super().__init__(message)
        self.field_path = field_path


# --- job registry --------------------------------------------------------------------

@dataclass
class Job:
    job_id: str
    request: RenderRequest
    directory: Path
    status: str = "queued"  # queued | running | done | failed
    n_frames: int = 0
    error: Optional[str] = None


class JobRegistry:
    def __init__(self, max_queued: int = 64):
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()
        self.queue: queue.Queue[str] = queue.Queue(maxsize=max_queued)

    def submit(self, job: Job) -> None:
        with self._lock:
            self._jobs[job.job_id] = job
        self.queue.put(job.job_id)

    def get(self, job_id: str) -> Optional[Job]:
        with self._lock:
            return self._jobs.get(job_id)

    def set_status(self, job_id: str, status: str, error: Optional[str] = None):
        with self._lock:
            job = self._jobs[job_id]
            job.status = status
            job.error = error


# --- application ----------------------------------------------------------------------

def create_app(workdir: str | Path, workers: int = 1) -> FastAPI:
    """Build the service around a `synth`-produced scene workdir
    (manifest.json + pointmap.gpm1, optional trajectory.json/tracks.json)."""
    workdir = Path(workdir)
    pm = pointmap.load_pointmap(workdir / "pointmap.gpm1")
    manifest = json.loads((workdir / "manifest.json").read_text())
    scene = scene_synth.load_manifest(workdir / "manifest.json")
    default_traj = None
    if (workdir / "trajectory.json").exists():
        default_traj = json.loads((workdir / "trajectory.json").read_text())
    default_tracks = None
    if (workdir / "tracks.json").exists():
        default_tracks = json.loads((workdir / "tracks.json").read_text())

    registry = JobRegistry()
    jobs_dir = workdir / "jobs"
    jobs_dir.mkdir(exist_ok=True)

    def run_job(job_id: str) -> None:
        job = registry.get(job_id)
        assert job is not None
        registry.set_status(job_id, "running")
        try:
            req = job.request
            traj = _trajectory_from_model(req.trajectory, "trajectory")
            tracks = _tracks_from_models(req.edits)
            cloud = pointmap.threshold_cloud(pm, req.options.tau)
            opts = renderer.RenderOptions(
                splat_radius=req.options.splat_radius,
                depth_min=req.options.depth_min,
                depth_max=req.options.depth_max,
            )
            frames = renderer.render_sequence(
                cloud, traj, edits=tracks or None, opts=opts
            )
            for t, frame in enumerate(frames):
                renderer.save_frame(frame, job.directory, t)
            job.n_frames = len(frames)
            registry.set_status(job_id, "done")
        except Exception as exc:  # job failures are reported, not raised
            registry.set_status(job_id, "failed", error=f"{type(exc).__name__}: {exc}")

    def worker_loop():
        while True:
            job_id = registry.queue.get()
            if job_id is None:
                return
            run_job(job_id)

    app = FastAPI(title="geoscaffold")
    app.state.registry = registry

    threads = [
        threading.Thread(target=worker_loop, daemon=True) for _ in range(workers)
    ]
    for t in threads:
        t.start()

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        errors = [
            {
                "field": ".".join(str(p) for p in e["loc"] if p != "body"),
                "message": e["msg"],
            }
            for e in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"error": "validation", "details": errors})

    @app.exception_handler(_FieldError)
    async def field_error_handler(request: Request, exc: _FieldError):
        return JSONResponse(
            status_code=400,
            content={
                "error": "validation",
                "details": [{"field": exc.field_path, "message": str(exc)}],
            },
        )

    @app.get("/scene")
    def get_scene():
        payload = {
            "schema_version": SCHEMA_VERSION,
            "manifest": manifest,
            "preview_uri": "/scene/preview.png",
            "width": pm.width,
            "height": pm.height,
            "f": scene.config.focal,
            "n_frames": scene.config.n_frames,
        }
        if default_traj is not None:
            payload["default_trajectory"] = default_traj
        if default_tracks is not None:
            payload["default_tracks"] = default_tracks
        return payload

    @app.get("/scene/preview.png")
    def scene_preview():
        from io import BytesIO

        from PIL import Image

        buf = BytesIO()
        Image.fromarray(pm.rgb, mode="RGB").save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.post("/render", status_code=202)
    def post_render(req: RenderRequest):
        # validate eagerly so schema problems come back as 400, not a failed job
        _trajectory_from_model(req.trajectory, "trajectory")
        _tracks_from_models(req.edits)
        job_id = uuid.uuid4().hex
        job = Job(job_id=job_id, request=req, directory=jobs_dir / job_id)
        job.directory.mkdir(parents=True)
        registry.submit(job)
        return {"job_id": job_id}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        job = registry.get(job_id)
        if job is None:
            return JSONResponse(status_code=404, content={"error": "unknown job"})
        payload = {
            "schema_version": SCHEMA_VERSION,
            "job_id": job.job_id,
            "status": job.status,
        }
        if job.status == "done":
            payload["frames"] = [
                f"/jobs/{job.job_id}/frames/{t}.png" for t in range(job.n_frames)
            ]
            payload["depths"] = [
                f"/jobs/{job.job_id}/frames/{t}.depth.bin"
                for t in range(job.n_frames)
            ]
        if job.error:
            payload["error"] = job.error
        return payload

    def _frame_file(job_id: str, t: int, suffix: str):
        job = registry.get(job_id)
        if job is None:
            return JSONResponse(status_code=404, content={"error": "unknown job"})
        if job.status != "done":
            return JSONResponse(
                status_code=409, content={"error": f"job is {job.status}, not done"}
            )
        path = job.directory / f"{t:04d}{suffix}"
        if not path.exists():
            return JSONResponse(status_code=404, content={"error": "unknown frame"})
        media = "image/png" if suffix == ".png" else "application/octet-stream"
        return FileResponse(path, media_type=media)

    @app.get("/jobs/{job_id}/frames/{t}.png")
    def get_frame(job_id: str, t: int):
        return _frame_file(job_id, t, ".png")

    @app.get("/jobs/{job_id}/frames/{t}.depth.bin")
    def get_depth(job_id: str, t: int):
        return _frame_file(job_id, t, ".depth.bin")

    @app.post("/metrics")
    def post_metrics(req: MetricsRequest):
        gt = _trajectory_from_model(req.gt_traj, "gt_traj")
        pred = _trajectory_from_model(req.pred_traj, "pred_traj")
        if len(gt) != len(pred):
            raise _FieldError("pred_traj.frames", "length differs from gt_traj")
        gt_pos = metrics.TrajectorySample(np.array([p.center for p in gt.poses]))
        pred_pos = metrics.TrajectorySample(np.array([p.center for p in pred.poses]))
        return {
            "schema_version": SCHEMA_VERSION,
            "ade": metrics.ade(gt_pos, pred_pos),
            "fde": metrics.fde(gt_pos, pred_pos),
        }

    @app.post("/preview")
    def post_preview(req: PreviewRequest):
        intr = geometry.Intrinsics(
            f=scene.config.focal, width=pm.width, height=pm.height
        )
        waypoints = []
        for i, wp in enumerate(req.waypoints):
            try:
                pose = geometry.CameraPose(
                    np.array(wp.R).reshape(3, 3), np.array(wp.T)
                )
            except ValueError as exc:
                raise _FieldError(f"waypoints[{i}].R", str(exc)) from exc
            waypoints.append((pose, wp.frame))
        try:
            traj = geometry.interpolate_trajectory(waypoints, req.n_frames, intr)
        except Exception as exc:
            raise _FieldError("waypoints", str(exc)) from exc
        pose0 = traj.poses[0]
        path_pixels = []
        for pose in traj.poses:
            proj = geometry.project_point(pose.center, pose0, intr)
            path_pixels.append([proj[0][0], proj[0][1]] if proj else None)
        return {
            "schema_version": SCHEMA_VERSION,
            "trajectory": geometry.trajectory_to_dict(traj),
            "path_pixels": path_pixels,
        }

    return app
