"""Camera model, projection, SE(3) pose estimation, trajectory utilities.

Conventions: poses are world->camera, x_cam = R @ x_world + T. The camera
looks along +z, x right, y down. Pixel (u, v) = (f*x/z + W/2, f*y/z + H/2).
The camera center in world coordinates is -R^T @ T.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import BadWaypointOrder, DegenerateInput

DEPTH_MIN = 0.1
DEPTH_MAX = 100.0

ROTATION_TOL = 1e-9
TRAJECTORY_SCHEMA_VERSION = 1


# --- SO(3) helpers -------------------------------------------------------------

def rotation_exp(omega: np.ndarray) -> np.ndarray:
    """Rodrigues: axis-angle 3-vector -> rotation matrix."""
    omega = np.asarray(omega, dtype=float)
    theta = float(np.linalg.norm(omega))
    K = np.array(
        [
            [0.0, -omega[2], omega[1]],
            [omega[2], 0.0, -omega[0]],
            [-omega[1], omega[0], 0.0],
        ]
    )
    if theta < 1e-10:
        # second-order series keeps exp/log consistent near identity
        return np.eye(3) + K + 0.5 * (K @ K)
    a = math.sin(theta) / theta
    b = (1.0 - math.cos(theta)) / (theta * theta)
    return np.eye(3) + a * K + b * (K @ K)


def rotation_log(R: np.ndarray) -> np.ndarray:
    """Rotation matrix -> axis-angle 3-vector (angle in [0, pi])."""
    R = np.asarray(R, dtype=float)
    cos_theta = (np.trace(R) - 1.0) / 2.0
    cos_theta = min(1.0, max(-1.0, cos_theta))
    theta = math.acos(cos_theta)
    if theta < 1e-10:
        return np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]) / 2.0
    if math.pi - theta < 1e-6:
        # near pi: extract axis from the symmetric part
        A = (R + np.eye(3)) / 2.0
        axis = np.sqrt(np.maximum(np.diag(A), 0.0))
        # fix signs using off-diagonals
        i = int(np.argmax(axis))
        if axis[i] > 0:
            for j in range(3):
                if j != i:
                    axis[j] = A[i, j] / axis[i] if abs(A[i, j]) > 1e-12 else axis[j]
        axis = axis / np.linalg.norm(axis)
        return axis * theta
    vee = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    return vee * theta / (2.0 * math.sin(theta))


# --- domain types --------------------------------------------------------------

@dataclass(frozen=True)
class Intrinsics:
    """Pinhole camera with principal point fixed at the image center."""

    f: float  # focal length, pixels
    width: int
    height: int

    def __post_init__(self):
        if self.f <= 0:
            raise ValueError(f"focal length must be positive, got {self.f}")


@dataclass(frozen=True)
class CameraPose:
    """World->camera rigid transform."""

    R: np.ndarray  # (3, 3)
    T: np.ndarray  # (3,)

    def __post_init__(self):
        object.__setattr__(self, "R", np.asarray(self.R, dtype=float).reshape(3, 3))
        object.__setattr__(self, "T", np.asarray(self.T, dtype=float).reshape(3))
        err = np.abs(self.R.T @ self.R - np.eye(3)).max()
        if err > ROTATION_TOL:
            raise ValueError(f"R not orthonormal (max |R^T R - I| = {err:.3g})")
        if abs(np.linalg.det(self.R) - 1.0) > ROTATION_TOL:
            raise ValueError(f"det(R) = {np.linalg.det(self.R):.9f}, expected +1")

    @property
    def center(self) -> np.ndarray:
        """Camera center in world coordinates, -R^T T."""
        return -self.R.T @ self.T

    @classmethod
    def identity(cls) -> "CameraPose":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_center(cls, R: np.ndarray, center: np.ndarray) -> "CameraPose":
        R = np.asarray(R, dtype=float)
        return cls(R, -R @ np.asarray(center, dtype=float))


@dataclass(frozen=True)
class Trajectory:
    poses: tuple[CameraPose, ...]
    intrinsics: Intrinsics

    def __post_init__(self):
        object.__setattr__(self, "poses", tuple(self.poses))
        if not self.poses:
            raise ValueError("trajectory must contain at least one pose")

    def __len__(self) -> int:
        return len(self.poses)


@dataclass(frozen=True)
class Match:
    """A 2D-3D correspondence for pose estimation."""

    world_point: np.ndarray  # (3,)
    pixel: np.ndarray  # (u, v)


@dataclass(frozen=True)
class PoseEstimate:
    pose: CameraPose
    cost: float  # summed squared pixel residual
    converged: bool
    iterations: int


# --- projection ----------------------------------------------------------------

def project_point(
    p_world: np.ndarray, pose: CameraPose, intr: Intrinsics
) -> Optional[tuple[tuple[float, float], float]]:
    """Project a world point; None if outside the depth range or image."""
    pc = pose.R @ np.asarray(p_world, dtype=float) + pose.T
    z = pc[2]
    if not (DEPTH_MIN <= z <= DEPTH_MAX):
        return None
    u = intr.f * pc[0] / z + intr.width / 2.0
    v = intr.f * pc[1] / z + intr.height / 2.0
    if not (0.0 <= u < intr.width and 0.0 <= v < intr.height):
        return None
    return (u, v), float(z)


def project_points(
    pts_world: np.ndarray, pose: CameraPose, intr: Intrinsics
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized projection without depth/bounds rejection.

    Returns (uv (N,2), depth (N,)). Depth may be <= 0 for points behind
    the camera; callers filter as needed.
    """
    pc = pts_world @ pose.R.T + pose.T
    z = pc[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = intr.f * pc[:, 0] / z + intr.width / 2.0
        v = intr.f * pc[:, 1] / z + intr.height / 2.0
    return np.stack([u, v], axis=1), z


# --- pose estimation (Levenberg-Marquardt over SE(3)) ---------------------------

def _residuals_and_jacobian(
    pose: CameraPose, world: np.ndarray, pixels: np.ndarray, intr: Intrinsics
):
    """Stacked pixel residuals and Jacobian w.r.t. a left-multiplied
    SE(3) increment (omega, tau)."""
    pc = world @ pose.R.T + pose.T  # (N, 3)
    x, y, z = pc[:, 0], pc[:, 1], pc[:, 2]
    u = intr.f * x / z + intr.width / 2.0
    v = intr.f * y / z + intr.height / 2.0
    r = np.stack([u - pixels[:, 0], v - pixels[:, 1]], axis=1)  # (N, 2)

    n = world.shape[0]
    # d(u,v)/dXc
    duv_dxc = np.zeros((n, 2, 3))
    duv_dxc[:, 0, 0] = intr.f / z
    duv_dxc[:, 0, 2] = -intr.f * x / (z * z)
    duv_dxc[:, 1, 1] = intr.f / z
    duv_dxc[:, 1, 2] = -intr.f * y / (z * z)
    # Xc' = exp([omega]x) Xc + tau  =>  dXc/domega = -[Xc]x, dXc/dtau = I
    dxc = np.zeros((n, 3, 6))
    dxc[:, 0, 1] = z
    dxc[:, 0, 2] = -y
    dxc[:, 1, 0] = -z
    dxc[:, 1, 2] = x
    dxc[:, 2, 0] = y
    dxc[:, 2, 1] = -x
    dxc[:, :, 3:] = np.eye(3)
    J = np.einsum("nij,njk->nik", duv_dxc, dxc).reshape(2 * n, 6)
    return r.reshape(2 * n), J


def _apply_increment(pose: CameraPose, xi: np.ndarray) -> CameraPose:
    dR = rotation_exp(xi[:3])
    R = dR @ pose.R
    # re-orthonormalize to keep the invariant through long iterations
    U, _, Vt = np.linalg.svd(R)
    R = U @ Vt
    if np.linalg.det(R) < 0:
        U[:, -1] *= -1
        R = U @ Vt
    return CameraPose(R, dR @ pose.T + xi[3:])


def estimate_pose(
    matches: Sequence[Match],
    intr: Intrinsics,
    init: CameraPose,
    max_iterations: int = 100,
    step_tol: float = 1e-10,
) -> PoseEstimate:
    """Minimize the summed squared reprojection error over SE(3).

    Damped Gauss-Newton: lambda starts at 1e-3, x10 on a rejected step,
    /10 on an accepted one. Raises DegenerateInput for < 6 matches or
    normal equations that stay singular at the damping cap.
    """
    if len(matches) < 6:
        raise DegenerateInput(f"need >= 6 matches, got {len(matches)}")
    world = np.array([m.world_point for m in matches], dtype=float)
    pixels = np.array([m.pixel for m in matches], dtype=float)

    pose = init
    r, J = _residuals_and_jacobian(pose, world, pixels, intr)
    cost = float(r @ r)
    lam = 1e-3
    converged = False
    iterations = 0

    for iterations in range(1, max_iterations + 1):
        JtJ = J.T @ J
        g = J.T @ r
        while True:
            A = JtJ + lam * np.eye(6)
            try:
                xi = np.linalg.solve(A, -g)
            except np.linalg.LinAlgError:
                xi = None
            if xi is None or not np.all(np.isfinite(xi)):
                lam *= 10.0
                if lam > 1e12:
                    raise DegenerateInput(
                        "normal equations rank-deficient at damping cap"
                    )
                continue
            break

        if np.linalg.norm(xi) < step_tol:
            converged = True
            break

        candidate = _apply_increment(pose, xi)
        r_new, J_new = _residuals_and_jacobian(candidate, world, pixels, intr)
        cost_new = float(r_new @ r_new)
        if cost_new <= cost:
            pose, r, J, cost = candidate, r_new, J_new, cost_new
            lam = max(lam / 10.0, 1e-12)
            if cost == 0.0:
                converged = True
                break
        else:
            lam *= 10.0
            if lam > 1e12:
                # cannot improve further; treat as converged to local minimum
                converged = True
                break

    return PoseEstimate(pose=pose, cost=cost, converged=converged, iterations=iterations)


# --- trajectory utilities --------------------------------------------------------

def interpolate_trajectory(
    waypoints: Sequence[tuple[CameraPose, int]],
    n_frames: int,
    intrinsics: Intrinsics,
) -> Trajectory:
    """Per-frame poses: translation linear, rotation geodesic between waypoints.

    Waypoint frame indices must be strictly increasing, starting at 0 and
    ending at n_frames - 1. Waypoint frames reproduce their poses exactly.
    """
    if not waypoints:
        raise BadWaypointOrder("no waypoints given")
    indices = [idx for _, idx in waypoints]
    if indices[0] != 0 or indices[-1] != n_frames - 1:
        raise BadWaypointOrder(
            f"waypoints must span frames 0..{n_frames - 1}, got {indices}"
        )
    if any(b <= a for a, b in zip(indices, indices[1:])):
        raise BadWaypointOrder(f"frame indices not strictly increasing: {indices}")

    poses: list[CameraPose] = []
    for (p0, i0), (p1, i1) in zip(waypoints, waypoints[1:]):
        omega = rotation_log(p1.R @ p0.R.T)
        for k in range(i0, i1):
            s = (k - i0) / (i1 - i0)
            if k == i0:
                poses.append(p0)
            else:
                R = rotation_exp(s * omega) @ p0.R
                T = (1.0 - s) * p0.T + s * p1.T
                poses.append(CameraPose(R, T))
    poses.append(waypoints[-1][0])
    return Trajectory(poses=tuple(poses), intrinsics=intrinsics)


def shift_trajectory(traj: Trajectory, lateral_offset: float) -> Trajectory:
    """Displace each camera center along its own x-axis; rotations unchanged."""
    shifted = []
    for pose in traj.poses:
        x_axis_world = pose.R[0, :]  # camera x-axis expressed in world coords
        center = pose.center + lateral_offset * x_axis_world
        shifted.append(CameraPose.from_center(pose.R, center))
    return Trajectory(poses=tuple(shifted), intrinsics=traj.intrinsics)


# --- JSON serialization -----------------------------------------------------------

def trajectory_to_dict(traj: Trajectory) -> dict:
    return {
        "schema_version": TRAJECTORY_SCHEMA_VERSION,
        "f": traj.intrinsics.f,
        "width": traj.intrinsics.width,
        "height": traj.intrinsics.height,
        "frames": [
            {"R": [float(x) for x in pose.R.reshape(-1)],
             "T": [float(x) for x in pose.T]}
            for pose in traj.poses
        ],
    }


def trajectory_from_dict(d: dict) -> Trajectory:
    intr = Intrinsics(f=float(d["f"]), width=int(d["width"]), height=int(d["height"]))
    poses = []
    for frame in d["frames"]:
        R = np.array(frame["R"], dtype=float).reshape(3, 3)
        T = np.array(frame["T"], dtype=float)
        poses.append(CameraPose(R, T))  # constructor enforces rotation invariants
    return Trajectory(poses=tuple(poses), intrinsics=intr)


def save_trajectory(traj: Trajectory, path: str | Path) -> None:
    Path(path).write_text(json.dumps(trajectory_to_dict(traj), indent=2))


def load_trajectory(path: str | Path) -> Trajectory:
    return trajectory_from_dict(json.loads(Path(path).read_text()))
