"""Command-line pipeline driver.

Subcommands: synth, render, estimate-pose, train-toy, refine, evaluate,
request-body, serve. Failures exit non-zero with a machine-readable JSON
error on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import dynamic_edit, geometry, metrics, pointmap, renderer, scene_synth
from .errors import GeoscaffoldError

SCHEMA_VERSION = 1


def canonical_render_request(
    traj_dict: dict, edits: list[dict], options: dict
) -> str:
    """Canonical JSON body for POST /render: recursively sorted keys,
    compact separators, integral floats rendered as integers. The studio
    UI reproduces these bytes exactly."""

    def canon(value):
        if isinstance(value, dict):
            return {k: canon(value[k]) for k in sorted(value)}
        if isinstance(value, list):
            return [canon(v) for v in value]
        if isinstance(value, float) and value.is_integer():
            return int(value)
        return value

    body = {
        "schema_version": SCHEMA_VERSION,
        "trajectory": {
            "f": traj_dict["f"],
            "width": traj_dict["width"],
            "height": traj_dict["height"],
            "frames": traj_dict["frames"],
        },
        "edits": edits,
        "options": options,
    }
    return json.dumps(canon(body), sort_keys=True, separators=(",", ":"))


def default_options(args) -> dict:
    return {
        "tau": args.tau,
        "splat_radius": args.splat_radius,
        "depth_min": 0.1,
        "depth_max": 100.0,
    }


def _load_edits(path: str | None) -> list[dynamic_edit.EditTrack]:
    return dynamic_edit.load_tracks(path) if path else []


# --- subcommands -----------------------------------------------------------------

def cmd_synth(args) -> int:
    overrides = {}
    if args.config:
        overrides = json.loads(Path(args.config).read_text())
        for key in ("dynamic_velocity", "dynamic_size", "dynamic_start"):
            if key in overrides:
                overrides[key] = tuple(overrides[key])
    cfg = scene_synth.SceneConfig(**overrides)
    scene = scene_synth.generate_scene(args.seed, cfg)
    traj = scene_synth.make_trajectory(cfg)
    pm = scene_synth.export_pointmap(scene, traj.poses[0], traj.intrinsics)
    track = scene_synth.gt_edit_track(scene, traj)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    scene_synth.save_manifest(scene, out / "manifest.json")
    pointmap.save_pointmap(pm, out / "pointmap.gpm1")
    geometry.save_trajectory(traj, out / "trajectory.json")
    dynamic_edit.save_tracks([track], out / "tracks.json")
    print(json.dumps({"out": str(out), "cloud_pixels": int((pm.confidence > 0.65).sum())}))
    return 0


def cmd_render(args) -> int:
    pm = pointmap.load_pointmap(args.pointmap)
    traj = geometry.load_trajectory(args.traj)
    edits = _load_edits(args.edits)
    cloud = pointmap.threshold_cloud(pm, args.tau)
    opts = renderer.RenderOptions(splat_radius=args.splat_radius)
    frames = renderer.render_sequence(cloud, traj, edits=edits or None, opts=opts)
    out = Path(args.out)
    for t, frame in enumerate(frames):
        renderer.save_frame(frame, out, t)
    print(json.dumps({"out": str(out), "frames": len(frames)}))
    return 0


def cmd_estimate_pose(args) -> int:
    pm = pointmap.load_pointmap(args.pointmap)
    spec = json.loads(Path(args.matches).read_text())
    intr = geometry.Intrinsics(f=float(spec["f"]), width=pm.width, height=pm.height)
    matches = [
        geometry.Match(
            world_point=np.array(m["world_point"], dtype=float),
            pixel=np.array(m["pixel"], dtype=float),
        )
        for m in spec["matches"]
    ]
    est = geometry.estimate_pose(matches, intr, geometry.CameraPose.identity())
    print(
        json.dumps(
            {
                "schema_version": SCHEMA_VERSION,
                "R": [float(x) for x in est.pose.R.reshape(-1)],
                "T": [float(x) for x in est.pose.T],
                "final_cost": est.cost,
                "converged": est.converged,
                "iterations": est.iterations,
            }
        )
    )
    return 0


def cmd_train_toy(args) -> int:
    import torch

    from .diffusion import (
        ConditionedDiT,
        DiTConfig,
        make_dataset,
        pretrain_backbone,
        save_checkpoint,
        train_condition_encoder,
    )

    data_dir = Path(args.data)
    data_dir.mkdir(parents=True, exist_ok=True)
    spec_path = data_dir / "dataset.json"
    if spec_path.exists():
        spec = json.loads(spec_path.read_text())
    else:
        spec = {"n_clips": args.clips, "seed": args.seed, "n_frames": 8,
                "width": 96, "height": 64}
        spec_path.write_text(json.dumps(spec, indent=2))

    torch.manual_seed(args.seed)
    dataset = make_dataset(**spec)
    backbone, pre_losses = pretrain_backbone(
        dataset, DiTConfig(), steps=args.pretrain_steps, seed=args.seed
    )
    model = ConditionedDiT(backbone)
    enc_losses = train_condition_encoder(
        model, dataset, steps=args.steps, seed=args.seed
    )
    save_checkpoint(model, args.out)
    loss_csv = Path(args.out).with_suffix(".loss.csv")
    with open(loss_csv, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["step", "loss"])
        for i, loss in enumerate(enc_losses):
            writer.writerow([i, loss])
    print(
        json.dumps(
            {
                "ckpt": str(args.out),
                "loss_csv": str(loss_csv),
                "pretrain_final_loss": pre_losses[-1] if pre_losses else None,
                "encoder_final_loss": enc_losses[-1] if enc_losses else None,
            }
        )
    )
    return 0


def _load_frame_dir(directory: Path) -> np.ndarray:
    from PIL import Image

    paths = sorted(directory.glob("[0-9][0-9][0-9][0-9].png"))
    if not paths:
        raise GeoscaffoldError(f"no frames found in {directory}")
    return np.stack([np.asarray(Image.open(p).convert("RGB")) for p in paths])


def cmd_refine(args) -> int:
    import torch

    from .diffusion import ddim_sample, decode_latent, encode_latent, load_checkpoint

    model = load_checkpoint(args.ckpt)
    model.eval()
    frames = _load_frame_dir(Path(args.renders)).astype(np.float32) / 255.0
    video = torch.from_numpy(frames).permute(0, 3, 1, 2)[None]  # (1, L, 3, H, W)
    z_r = encode_latent(video)
    gen = torch.Generator().manual_seed(args.seed)
    z_T = torch.randn(z_r.shape, generator=gen)
    z0 = ddim_sample(model, z_T, z_r, steps=args.steps)
    refined = decode_latent(z0).clamp(0.0, 1.0)[0].permute(0, 2, 3, 1).numpy()

    from PIL import Image

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for t in range(refined.shape[0]):
        img = (refined[t] * 255.0).round().astype(np.uint8)
        Image.fromarray(img, mode="RGB").save(out / f"{t:04d}.png")
    print(json.dumps({"out": str(out), "frames": int(refined.shape[0])}))
    return 0


def cmd_evaluate(args) -> int:
    gt_traj = geometry.load_trajectory(args.gt_traj)
    pred_traj = geometry.load_trajectory(args.pred_traj)
    gt_pos = metrics.TrajectorySample(np.array([p.center for p in gt_traj.poses]))
    pred_pos = metrics.TrajectorySample(np.array([p.center for p in pred_traj.poses]))

    gt_frames = _load_frame_dir(Path(args.gt)).astype(np.float64) / 255.0
    pred_frames = _load_frame_dir(Path(args.pred)).astype(np.float64) / 255.0
    if gt_frames.shape != pred_frames.shape:
        raise GeoscaffoldError(
            f"frame sets differ: {gt_frames.shape} vs {pred_frames.shape}"
        )
    psnrs = [metrics.psnr(a, b) for a, b in zip(gt_frames, pred_frames)]
    ssims = [metrics.ssim(a, b) for a, b in zip(gt_frames, pred_frames)]
    psnr_mean = float(np.mean(psnrs)) if all(np.isfinite(psnrs)) else float("inf")
    result = {
        "schema_version": SCHEMA_VERSION,
        "ade": metrics.ade(gt_pos, pred_pos),
        "fde": metrics.fde(gt_pos, pred_pos),
        "psnr_mean": psnr_mean,
        "ssim_mean": float(np.mean(ssims)),
    }
    # +inf is not valid JSON; use a string sentinel
    if not np.isfinite(result["psnr_mean"]):
        result["psnr_mean"] = "inf"
    print(json.dumps(result))
    return 0


def cmd_request_body(args) -> int:
    traj = geometry.load_trajectory(args.traj)
    edits = [dynamic_edit.track_to_dict(t) for t in _load_edits(args.edits)]
    body = canonical_render_request(
        geometry.trajectory_to_dict(traj), edits, default_options(args)
    )
    sys.stdout.write(body)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    workdir = args.workdir or os.environ.get("GEOSCAFFOLD_WORKDIR")
    if not workdir:
        raise GeoscaffoldError("pass --workdir or set GEOSCAFFOLD_WORKDIR")
    app = create_app(workdir, workers=args.workers)
    uvicorn.run(app, host="127.0.0.1", port=args.port)
    return 0


# --- argument parsing ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoscaffold")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scene bundle")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="JSON file of SceneConfig overrides")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("render", help="z-buffer render along a trajectory")
    p.add_argument("--pointmap", required=True)
    p.add_argument("--traj", required=True)
    p.add_argument("--edits")
    p.add_argument("--tau", type=float, default=0.65)
    p.add_argument("--splat-radius", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("estimate-pose", help="solve a pose from 2D-3D matches")
    p.add_argument("--pointmap", required=True)
    p.add_argument("--matches", required=True)
    p.set_defaults(func=cmd_estimate_pose)

    p = sub.add_parser("train-toy", help="train the toy conditioned diffusion model")
    p.add_argument("--data", required=True)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--pretrain-steps", type=int, default=2000)
    p.add_argument("--clips", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_toy)

    p = sub.add_parser("refine", help="diffusion-refine rendered frames")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--renders", required=True)
    p.add_argument("--steps", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_refine)

    p = sub.add_parser("evaluate", help="trajectory and image metrics")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--gt-traj", required=True)
    p.add_argument("--pred-traj", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("request-body", help="canonical POST /render body")
    p.add_argument("--traj", required=True)
    p.add_argument("--edits")
    p.add_argument("--tau", type=float, default=0.65)
    p.add_argument("--splat-radius", type=int, default=0)
    p.set_defaults(func=cmd_request_body)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--workdir")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GeoscaffoldError, ValueError, OSError) as exc:
        sys.stderr.write(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n"
        )
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
