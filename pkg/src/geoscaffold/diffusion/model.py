"""Toy latent video diffusion transformer with a dual-branch condition
encoder.

The backbone is a plain DiT: patchified latent tokens, sinusoidal
timestep embedding, adaLN-modulated transformer blocks. The condition
encoder clones the backbone's first two blocks, consumes the channel-wise
concatenation of the noisy latent and the render latent, and its two
outputs are injected additively into backbone blocks through a single
linear map initialized to zero, so at initialization the conditioned
model is exactly the unconditional backbone. With M backbone blocks,
block i receives the encoder output with index i // (M/2).
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass

import torch
import torch.nn as nn
from einops import rearrange

from ..errors import ShapeMismatch
from .codec import LATENT_CHANNELS


@dataclass(frozen=True)
class DiTConfig:
    num_layers: int = 8  # M, must be even
    hidden_dim: int = 64
    patch_size: int = 4
    num_heads: int = 4
    encoder_layers: int = 2
    latent_channels: int = LATENT_CHANNELS
    mlp_ratio: float = 4.0

    def __post_init__(self):
        if self.num_layers % 2 != 0:
            raise ValueError(f"num_layers must be even, got {self.num_layers}")
        if self.encoder_layers != 2:
            raise ValueError("the condition encoder clones exactly 2 layers")
        if self.hidden_dim % self.num_heads != 0:
            raise ValueError("hidden_dim must be divisible by num_heads")


def timestep_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    """Sinusoidal embedding of continuous t in [0, 1]."""
    half = dim // 2
    freqs = torch.exp(
        -math.log(10000.0)
        * torch.arange(half, dtype=t.dtype, device=t.device)
        / half
    )
    args = t[:, None] * 1000.0 * freqs[None, :]
    return torch.cat([torch.cos(args), torch.sin(args)], dim=-1)


def sincos_positions(n: int, dim: int, dtype, device) -> torch.Tensor:
    pos = torch.arange(n, dtype=dtype, device=device)
    half = dim // 2
    freqs = torch.exp(
        -math.log(10000.0) * torch.arange(half, dtype=dtype, device=device) / half
    )
    args = pos[:, None] * freqs[None, :]
    return torch.cat([torch.cos(args), torch.sin(args)], dim=-1)


class Attention(nn.Module):
    def __init__(self, dim: int, num_heads: int):
        super().__init__()
        self.num_heads = num_heads
        self.qkv = nn.Linear(dim, dim * 3)
        self.proj = nn.Linear(dim, dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, n, d = x.shape
        qkv = self.qkv(x).reshape(b, n, 3, self.num_heads, d // self.num_heads)
        q, k, v = qkv.permute(2, 0, 3, 1, 4)
        scale = (d // self.num_heads) ** -0.5
        attn = torch.softmax((q @ k.transpose(-2, -1)) * scale, dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(b, n, d)
        return self.proj(out)


class DiTBlock(nn.Module):
    """Transformer block with adaLN-zero timestep modulation."""

    def __init__(self, cfg: DiTConfig):
        super().__init__()
        d = cfg.hidden_dim
        self.norm1 = nn.LayerNorm(d, elementwise_affine=False)
        self.attn = Attention(d, cfg.num_heads)
        self.norm2 = nn.LayerNorm(d, elementwise_affine=False)
        hidden = int(d * cfg.mlp_ratio)
        self.mlp = nn.Sequential(
            nn.Linear(d, hidden), nn.GELU(), nn.Linear(hidden, d)
        )
        self.ada = nn.Sequential(nn.SiLU(), nn.Linear(d, 6 * d))
        nn.init.zeros_(self.ada[1].weight)
        nn.init.zeros_(self.ada[1].bias)

    def forward(self, x: torch.Tensor, c: torch.Tensor) -> torch.Tensor:
        shift_a, scale_a, gate_a, shift_m, scale_m, gate_m = self.ada(c).chunk(
            6, dim=-1
        )
        h = self.norm1(x) * (1 + scale_a[:, None]) + shift_a[:, None]
        x = x + gate_a[:, None] * self.attn(h)
        h = self.norm2(x) * (1 + scale_m[:, None]) + shift_m[:, None]
        x = x + gate_m[:, None] * self.mlp(h)
        return x


class DiTBackbone(nn.Module):
    """Unconditional epsilon-predictor over latent clips (B, L, C, h, w)."""

    def __init__(self, cfg: DiTConfig):
        super().__init__()
        self.cfg = cfg
        p, d = cfg.patch_size, cfg.hidden_dim
        self.patch_embed = nn.Linear(cfg.latent_channels * p * p, d)
        self.t_mlp = nn.Sequential(nn.Linear(d, d), nn.SiLU(), nn.Linear(d, d))
        self.blocks = nn.ModuleList(DiTBlock(cfg) for _ in range(cfg.num_layers))
        self.final_norm = nn.LayerNorm(d, elementwise_affine=False)
        self.final = nn.Linear(d, cfg.latent_channels * p * p)
        nn.init.zeros_(self.final.weight)
        nn.init.zeros_(self.final.bias)
        # timestep-gated long skip from the raw patch tokens to the output;
        # the hidden width is far below the patch content size, so without
        # it the model cannot express eps_hat ~ x_t at all. Zero-init keeps
        # the initial output exactly zero.
        self.skip_gate = nn.Sequential(
            nn.SiLU(), nn.Linear(d, cfg.latent_channels * p * p)
        )
        nn.init.zeros_(self.skip_gate[1].weight)
        nn.init.zeros_(self.skip_gate[1].bias)

    def _check(self, z: torch.Tensor) -> None:
        if z.dim() != 5:
            raise ShapeMismatch(f"expected (B, L, C, h, w), got {tuple(z.shape)}")
        p = self.cfg.patch_size
        if z.shape[2] != self.cfg.latent_channels:
            raise ShapeMismatch(
                f"latent channels {z.shape[2]} != {self.cfg.latent_channels}"
            )
        if z.shape[3] % p or z.shape[4] % p:
            raise ShapeMismatch(
                f"latent spatial {z.shape[3]}x{z.shape[4]} not divisible by patch {p}"
            )

    def patchify(self, z: torch.Tensor) -> torch.Tensor:
        p = self.cfg.patch_size
        return rearrange(
            z, "b l c (hp p1) (wp p2) -> b (l hp wp) (c p1 p2)", p1=p, p2=p
        )

    def tokenize(self, z: torch.Tensor) -> torch.Tensor:
        x = self.patch_embed(self.patchify(z))
        pos = sincos_positions(x.shape[1], x.shape[2], x.dtype, x.device)
        return x + pos[None]

    def untokenize(self, x: torch.Tensor, shape: torch.Size) -> torch.Tensor:
        p = self.cfg.patch_size
        _, l, _, h, w = shape
        return rearrange(
            x,
            "b (l hp wp) (c p1 p2) -> b l c (hp p1) (wp p2)",
            l=l,
            hp=h // p,
            wp=w // p,
            p1=p,
            p2=p,
        )

    def time_embedding(self, t: torch.Tensor, like: torch.Tensor) -> torch.Tensor:
        t = t.to(like.dtype).to(like.device).reshape(-1)
        return self.t_mlp(timestep_embedding(t, self.cfg.hidden_dim))

    def forward(
        self,
        z_t: torch.Tensor,
        t: torch.Tensor | float,
        injections: list[torch.Tensor | None] | None = None,
    ) -> torch.Tensor:
        """Predict epsilon. ``injections[i]``, when given, is added to the
        output of block i (post-residual)."""
        self._check(z_t)
        if not isinstance(t, torch.Tensor):
            t = torch.full((z_t.shape[0],), float(t), dtype=z_t.dtype)
        c = self.time_embedding(t, z_t)
        x = self.tokenize(z_t)
        for i, block in enumerate(self.blocks):
            x = block(x, c)
            if injections is not None and injections[i] is not None:
                x = x + injections[i]
        x = self.final(self.final_norm(x))
        x = x + self.skip_gate(c)[:, None, :] * self.patchify(z_t)
        return self.untokenize(x, z_t.shape)


class ConditionEncoder(nn.Module):
    """Clone of the backbone's first two blocks over [z_t, z_R] tokens."""

    def __init__(self, cfg: DiTConfig, backbone: DiTBackbone):
        super().__init__()
        self.cfg = cfg
        p, d = cfg.patch_size, cfg.hidden_dim
        self.patch_embed = nn.Linear(2 * cfg.latent_channels * p * p, d)
        self.blocks = nn.ModuleList(
            copy.deepcopy(backbone.blocks[i]) for i in range(cfg.encoder_layers)
        )

    def forward(
        self, z_t: torch.Tensor, z_r: torch.Tensor, c: torch.Tensor
    ) -> list[torch.Tensor]:
        p = self.cfg.patch_size
        z = torch.cat([z_t, z_r], dim=2)  # channel-wise concatenation
        x = rearrange(
            z, "b l c (hp p1) (wp p2) -> b (l hp wp) (c p1 p2)", p1=p, p2=p
        )
        x = self.patch_embed(x)
        pos = sincos_positions(x.shape[1], x.shape[2], x.dtype, x.device)
        x = x + pos[None]
        feats = []
        for block in self.blocks:
            x = block(x, c)
            feats.append(x)
        return feats


class ConditionedDiT(nn.Module):
    """Frozen backbone + trainable condition encoder and zero-init fusion."""

    def __init__(self, backbone: DiTBackbone):
        super().__init__()
        cfg = backbone.cfg
        self.cfg = cfg
        self.backbone = backbone
        self.encoder = ConditionEncoder(cfg, backbone)
        self.fuse = nn.Linear(cfg.hidden_dim, cfg.hidden_dim)
        nn.init.zeros_(self.fuse.weight)
        nn.init.zeros_(self.fuse.bias)

    def freeze_backbone(self) -> None:
        for p in self.backbone.parameters():
            p.requires_grad_(False)

    def trainable_parameters(self):
        yield from self.encoder.parameters()
        yield from self.fuse.parameters()

    def forward(
        self, z_t: torch.Tensor, t: torch.Tensor | float, z_r: torch.Tensor
    ) -> torch.Tensor:
        if z_r.shape != z_t.shape:
            raise ShapeMismatch(
                f"z_r shape {tuple(z_r.shape)} != z_t {tuple(z_t.shape)}"
            )
        if not isinstance(t, torch.Tensor):
            t = torch.full((z_t.shape[0],), float(t), dtype=z_t.dtype)
        c = self.backbone.time_embedding(t, z_t)
        feats = self.encoder(z_t, z_r, c)
        m = self.cfg.num_layers
        injections = [self.fuse(feats[i // (m // 2)]) for i in range(m)]
        return self.backbone(z_t, t, injections=injections)
