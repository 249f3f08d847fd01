"""Deterministic DDIM-style sampler."""

from __future__ import annotations

import torch

from ..errors import ShapeMismatch
from .schedule import CosineSchedule

EPS_FLOOR = 0.05  # guards the x0 estimate where alpha(t) -> 0


@torch.no_grad()
def ddim_sample(
    model,
    z_T: torch.Tensor,
    z_R: torch.Tensor | None,
    steps: int = 50,
    schedule: CosineSchedule = CosineSchedule(),
    eps_floor: float = EPS_FLOOR,
) -> torch.Tensor:
    """Iterate from t=1 to t=0; deterministic given (model, z_T, z_R).

    At each grid point the x0 estimate is (x - sigma * eps_hat) /
    max(alpha, eps_floor); the floor keeps the first step finite where
    alpha(1) = 0. Pass z_R=None to sample the unconditional backbone.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if z_R is not None and z_R.shape != z_T.shape:
        raise ShapeMismatch(f"z_R shape {tuple(z_R.shape)} != {tuple(z_T.shape)}")

    x = z_T
    ts = [1.0 - k / steps for k in range(steps + 1)]  # 1 -> 0 inclusive
    for t_cur, t_next in zip(ts, ts[1:]):
        eps_hat = model(x, t_cur, z_R) if z_R is not None else model(x, t_cur)
        a = max(schedule.alpha(t_cur), eps_floor)
        x0_hat = (x - schedule.sigma(t_cur) * eps_hat) / a
        x = schedule.alpha(t_next) * x0_hat + schedule.sigma(t_next) * eps_hat
    return x
