"""Trajectory-fidelity (ADE/FDE) and image-quality (PSNR/SSIM) metrics.

Trajectory samples are sequences of camera centers in meters. Images are
float arrays in [0, 1] (8-bit inputs should be divided by 255); the
dynamic range for PSNR/SSIM is 1.0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate

from .errors import DimensionMismatch, LengthMismatch, TooSmall

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class TrajectorySample:
    positions: np.ndarray  # (T, 3) camera centers, meters

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        if pos.shape[0] == 0:
            raise ValueError("trajectory sample must be non-empty")
        if not np.all(np.isfinite(pos)):
            raise ValueError("trajectory sample contains non-finite values")
        object.__setattr__(self, "positions", pos)


def ade(gt: TrajectorySample, pred: TrajectorySample) -> float:
    """Average Euclidean displacement over all frames."""
    if gt.positions.shape != pred.positions.shape:
        raise LengthMismatch(
            f"{gt.positions.shape[0]} vs {pred.positions.shape[0]} positions"
        )
    return float(np.linalg.norm(gt.positions - pred.positions, axis=1).mean())


def fde(gt: TrajectorySample, pred: TrajectorySample) -> float:
    """Euclidean displacement between the final positions."""
    if gt.positions.shape != pred.positions.shape:
        raise LengthMismatch(
            f"{gt.positions.shape[0]} vs {pred.positions.shape[0]} positions"
        )
    return float(np.linalg.norm(gt.positions[-1] - pred.positions[-1]))


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """10*log10(1/MSE) for images in [0, 1]; +inf for identical images."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def _gaussian_kernel(size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA) -> np.ndarray:
    half = (size - 1) / 2.0
    coords = np.arange(size) - half
    g = np.exp(-(coords**2) / (2.0 * sigma**2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def _ssim_single_channel(a: np.ndarray, b: np.ndarray) -> float:
    kernel = _gaussian_kernel()
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2

    mu_a = correlate(a, kernel, mode="constant")
    mu_b = correlate(b, kernel, mode="constant")
    s_aa = correlate(a * a, kernel, mode="constant") - mu_a**2
    s_bb = correlate(b * b, kernel, mode="constant") - mu_b**2
    s_ab = correlate(a * b, kernel, mode="constant") - mu_a * mu_b

    ssim_map = ((2 * mu_a * mu_b + c1) * (2 * s_ab + c2)) / (
        (mu_a**2 + mu_b**2 + c1) * (s_aa + s_bb + c2)
    )
    # crop the border where the window leaves the image
    pad = SSIM_WINDOW // 2
    return float(ssim_map[pad:-pad, pad:-pad].mean())


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local SSIM, 11x11 Gaussian window sigma=1.5, range 1.0.

    Computed per channel and averaged; the half-window border is excluded
    from the mean so every window lies fully inside the image.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"{a.shape} vs {b.shape}")
    if a.shape[0] < SSIM_WINDOW or a.shape[1] < SSIM_WINDOW:
        raise TooSmall(f"images must be >= {SSIM_WINDOW}x{SSIM_WINDOW}, got {a.shape}")
    if a.ndim == 2:
        return _ssim_single_channel(a, b)
    return float(
        np.mean([_ssim_single_channel(a[..., c], b[..., c]) for c in range(a.shape[2])])
    )
