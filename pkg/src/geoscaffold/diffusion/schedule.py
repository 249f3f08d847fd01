"""Continuous-time noise schedule with alpha(t)^2 + sigma(t)^2 = 1."""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch

from ..errors import ShapeMismatch


@dataclass(frozen=True)
class CosineSchedule:
    """alpha(t) = cos(pi t / 2), sigma(t) = sin(pi t / 2), t in [0, 1]."""

    def alpha(self, t: float) -> float:
        return math.cos(math.pi * t / 2.0)

    def sigma(self, t: float) -> float:
        return math.sin(math.pi * t / 2.0)


def forward_noise(
    z0: torch.Tensor,
    t: torch.Tensor | float,
    eps: torch.Tensor,
    schedule: CosineSchedule = CosineSchedule(),
) -> torch.Tensor:
    """x_t = alpha(t) * z0 + sigma(t) * eps.

    ``t`` may be a scalar or a per-sample tensor broadcast over leading
    batch dimension.
    """
    if eps.shape != z0.shape:
        raise ShapeMismatch(f"eps shape {tuple(eps.shape)} != z0 {tuple(z0.shape)}")
    if isinstance(t, torch.Tensor):
        shape = (-1,) + (1,) * (z0.dim() - 1)
        half_pi_t = (math.pi / 2.0) * t.reshape(shape).to(z0.dtype)
        return torch.cos(half_pi_t) * z0 + torch.sin(half_pi_t) * eps
    return schedule.alpha(t) * z0 + schedule.sigma(t) * eps
