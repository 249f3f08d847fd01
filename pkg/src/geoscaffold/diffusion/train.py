"""Toy training loops and synthetic clip datasets.

The backbone is "pretrained" unconditionally on synthetic ground-truth
clips, then frozen; only the condition encoder and the zero-initialized
fusion map are optimized afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..dynamic_edit import EditTrack
from ..errors import NonFiniteLoss
from ..pointmap import threshold_cloud
from ..renderer import RenderOptions, render_sequence
from ..scene_synth import (
    SceneConfig,
    export_pointmap,
    generate_scene,
    gt_edit_track,
    make_trajectory,
    oracle_video,
)
from .codec import encode_latent
from .model import ConditionedDiT, DiTBackbone, DiTConfig
from .schedule import CosineSchedule, forward_noise


@dataclass
class ClipDataset:
    """Paired (ground truth, holey render) clips, float32 in [0, 1],
    shaped (N, L, 3, H, W)."""

    gt_videos: torch.Tensor
    render_videos: torch.Tensor

    def __len__(self) -> int:
        return self.gt_videos.shape[0]


def make_clip(clip_seed: int, n_frames: int = 8, width: int = 96, height: int = 64):
    """One synthetic training pair: oracle video and its z-buffer render.

    Scene parameters are drawn from the clip seed; draws that push the
    dynamic cuboid out of view on some frame are rejected and redrawn
    (deterministically) so the ground-truth track is always defined.
    """
    for attempt in range(64):
        rng = np.random.default_rng((clip_seed, attempt))
        cfg = SceneConfig(
            width=width,
            height=height,
            focal=80.0,
            n_frames=n_frames,
            n_static_boxes=int(rng.integers(2, 6)),
            camera_style="straight" if clip_seed % 2 == 0 else "curved",
            camera_speed=float(rng.uniform(0.2, 0.45)),
            checker_size=float(rng.uniform(1.5, 3.0)),
            dynamic_velocity=(
                float(rng.uniform(-0.2, 0.2)),
                0.0,
                float(rng.uniform(-0.05, 0.3)),
            ),
            dynamic_start=(
                float(rng.uniform(-3.0, 0.5)),
                -0.9,
                float(rng.uniform(8.0, 14.0)),
            ),
        )
        scene = generate_scene(clip_seed, cfg)
        traj = make_trajectory(cfg)
        try:
            track = gt_edit_track(scene, traj)
        except ValueError:
            continue
        gt = oracle_video(scene, traj)
        pm = export_pointmap(scene, traj.poses[0], traj.intrinsics)
        cloud = threshold_cloud(pm, 0.65)
        frames = render_sequence(cloud, traj, edits=[track], opts=RenderOptions())
        render = np.stack([f.rgb for f in frames])
        return gt, render
    raise ValueError(f"no visible-cuboid scene found for clip seed {clip_seed}")


def make_dataset(
    n_clips: int, seed: int, n_frames: int = 8, width: int = 96, height: int = 64
) -> ClipDataset:
    gts, renders = [], []
    for i in range(n_clips):
        gt, render = make_clip(seed * 100_000 + i, n_frames, width, height)
        gts.append(gt)
        renders.append(render)
    gt_videos = torch.from_numpy(np.stack(gts)).permute(0, 1, 4, 2, 3).float() / 255.0
    render_videos = (
        torch.from_numpy(np.stack(renders)).permute(0, 1, 4, 2, 3).float() / 255.0
    )
    return ClipDataset(gt_videos=gt_videos, render_videos=render_videos)


def _check_finite(loss: torch.Tensor, step: int) -> None:
    if not torch.isfinite(loss):
        raise NonFiniteLoss(f"loss became {loss.item()} at step {step}")


def pretrain_backbone(
    dataset: ClipDataset,
    cfg: DiTConfig = DiTConfig(),
    steps: int = 2000,
    batch_size: int = 8,
    lr: float = 1e-3,
    seed: int = 0,
) -> tuple[DiTBackbone, list[float]]:
    """Unconditional epsilon-prediction pretraining on ground-truth clips."""
    torch.manual_seed(seed)
    backbone = DiTBackbone(cfg)
    opt = torch.optim.AdamW(backbone.parameters(), lr=lr)
    gen = torch.Generator().manual_seed(seed + 1)
    losses = []
    for step in range(steps):
        idx = torch.randint(0, len(dataset), (batch_size,), generator=gen)
        z0 = encode_latent(dataset.gt_videos[idx])
        t = torch.rand(batch_size, generator=gen)
        eps = torch.randn(z0.shape, generator=gen)
        x_t = forward_noise(z0, t, eps)
        loss = torch.mean((backbone(x_t, t) - eps) ** 2)
        _check_finite(loss, step)
        opt.zero_grad()
        loss.backward()
        opt.step()
        losses.append(float(loss.detach()))
    return backbone, losses


def train_condition_encoder(
    model: ConditionedDiT,
    dataset: ClipDataset,
    steps: int = 2000,
    batch_size: int = 8,
    lr: float = 1e-3,
    seed: int = 0,
) -> list[float]:
    """Optimize only the condition encoder and the fusion map; the frozen
    backbone's parameters are bitwise unchanged."""
    model.freeze_backbone()
    opt = torch.optim.AdamW(list(model.trainable_parameters()), lr=lr)
    gen = torch.Generator().manual_seed(seed + 2)
    losses = []
    for step in range(steps):
        idx = torch.randint(0, len(dataset), (batch_size,), generator=gen)
        z0 = encode_latent(dataset.gt_videos[idx])
        zr = encode_latent(dataset.render_videos[idx])
        t = torch.rand(batch_size, generator=gen)
        eps = torch.randn(z0.shape, generator=gen)
        x_t = forward_noise(z0, t, eps)
        loss = torch.mean((model(x_t, t, zr) - eps) ** 2)
        _check_finite(loss, step)
        opt.zero_grad()
        loss.backward()
        opt.step()
        losses.append(float(loss.detach()))
    return losses


@torch.no_grad()
def eval_eps_mse(
    forward_fn,
    dataset: ClipDataset,
    conditioned: bool,
    seed: int = 123,
    draws_per_clip: int = 4,
) -> float:
    """Validation epsilon-MSE at fixed (t, eps) draws shared across models."""
    gen = torch.Generator().manual_seed(seed)
    total, count = 0.0, 0
    for i in range(len(dataset)):
        z0 = encode_latent(dataset.gt_videos[i : i + 1])
        zr = encode_latent(dataset.render_videos[i : i + 1])
        for _ in range(draws_per_clip):
            t = torch.rand(1, generator=gen)
            eps = torch.randn(z0.shape, generator=gen)
            x_t = forward_noise(z0, t, eps)
            pred = forward_fn(x_t, t, zr) if conditioned else forward_fn(x_t, t)
            total += float(torch.mean((pred - eps) ** 2))
            count += 1
    return total / count
