"""Lossless video <-> latent codec: space-to-depth patchification.

Stands in for a learned VAE. Factor 8 in each spatial dimension, so an
RGB clip (L, 3, H, W) becomes a latent (L, 192, H/8, W/8), and
decode(encode(x)) is bitwise identity.
"""

from __future__ import annotations

import torch
from einops import rearrange

from ..errors import BadDimensions

CODEC_FACTOR = 8
LATENT_CHANNELS = 3 * CODEC_FACTOR * CODEC_FACTOR  # 192


def encode_latent(frames: torch.Tensor) -> torch.Tensor:
    """(..., L, 3, H, W) -> (..., L, 192, H/8, W/8)."""
    h, w = frames.shape[-2:]
    if h % CODEC_FACTOR or w % CODEC_FACTOR:
        raise BadDimensions(
            f"frame size {h}x{w} not divisible by codec factor {CODEC_FACTOR}"
        )
    return rearrange(
        frames,
        "... c (hh p1) (ww p2) -> ... (c p1 p2) hh ww",
        p1=CODEC_FACTOR,
        p2=CODEC_FACTOR,
    )


def decode_latent(z: torch.Tensor) -> torch.Tensor:
    """Inverse of encode_latent."""
    if z.shape[-3] != LATENT_CHANNELS:
        raise BadDimensions(
            f"latent has {z.shape[-3]} channels, expected {LATENT_CHANNELS}"
        )
    return rearrange(
        z,
        "... (c p1 p2) hh ww -> ... c (hh p1) (ww p2)",
        p1=CODEC_FACTOR,
        p2=CODEC_FACTOR,
    )
