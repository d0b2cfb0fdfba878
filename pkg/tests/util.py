"""Shared random generators and matrix-based oracles for the test suite.

The oracles here deliberately avoid the package's quaternion code paths:
rotations are built with Rodrigues' formula and poses composed as 4x4
homogeneous matrices, so they can contradict the implementation.
"""

from __future__ import annotations

import math

import numpy as np

from affordkit.geometry import Pose


def rodrigues(axis, angle):
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    kx, ky, kz = axis
    k = np.array([[0, -kz, ky], [kz, 0, -kx], [-ky, kx, 0]])
    return np.eye(3) + math.sin(angle) * k + (1 - math.cos(angle)) * (k @ k)


def quat_to_matrix_oracle(q):
    """Rotation matrix via axis-angle decomposition of the quaternion."""
    w = float(np.clip(q[0], -1.0, 1.0))
    angle = 2.0 * math.acos(w)
    s = math.sqrt(max(0.0, 1.0 - w * w))
    if s < 1e-12:
        return np.eye(3)
    return rodrigues(np.asarray(q[1:]) / s, angle)


def pose_to_homogeneous(p: Pose) -> np.ndarray:
    m = np.eye(4)
    m[:3, :3] = quat_to_matrix_oracle(p.orientation)
    m[:3, 3] = p.position
    return m


def random_quat(rng) -> np.ndarray:
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


def random_pose(rng, scale: float = 1.0) -> Pose:
    return Pose(rng.uniform(-scale, scale, size=3), random_quat(rng))


def pinhole_oracle(cam, point_world) -> np.ndarray:
    """Independent projection: homogeneous world->camera inverse then K."""
    m = pose_to_homogeneous(cam.extrinsic)
    world_to_cam = np.linalg.inv(m)
    p = world_to_cam @ np.array([*point_world, 1.0])
    assert p[2] > 0, "oracle only defined for points in front of the camera"
    return np.array([cam.fx * p[0] / p[2] + cam.cx, cam.fy * p[1] / p[2] + cam.cy])
