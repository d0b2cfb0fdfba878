"""SE(3) poses, pinhole cameras, and the four-point gripper outline.

Coordinate conventions:
  World frame (right-handed):
    +Z up, table plane at constant Z.
  Camera frame (standard pinhole):
    +X right, +Y down, +Z forward (optical axis). The extrinsic is stored
    camera-in-world and inverted at projection time, so
    u = fx * x / z + cx and v = fy * y / z + cy hold with no sign juggling.
  End-effector frame:
    +Z points from the arm toward the fingertips; a top-down grasp therefore
    has EE +Z aligned with world -Z.

Quaternions are (w, x, y, z), unit norm. Yaw-pitch-roll enters only at
config/file boundaries (see ``quat_from_rpy``); everything internal is
quaternion-based to avoid gimbal issues in composition chains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

QUAT_NORM_TOL = 1e-9
MIN_DEPTH = 1e-9


class BehindCamera(Exception):
    """A point to be projected has camera-frame depth z <= MIN_DEPTH."""


def quat_normalize(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    if n == 0.0 or not math.isfinite(n):
        raise ValueError("quaternion has zero or non-finite norm")
    return q / n


def quat_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a*b for (w,x,y,z) quaternions."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector v by unit quaternion q (q v q*)."""
    w, x, y, z = q
    vx, vy, vz = v
    # t = 2 * (q_vec x v)
    tx = 2.0 * (y * vz - z * vy)
    ty = 2.0 * (z * vx - x * vz)
    tz = 2.0 * (x * vy - y * vx)
    return np.array(
        [
            vx + w * tx + (y * tz - z * ty),
            vy + w * ty + (z * tx - x * tz),
            vz + w * tz + (x * ty - y * tx),
        ]
    )


def quat_from_axis_angle(axis: np.ndarray, angle_rad: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n == 0.0:
        raise ValueError("rotation axis must be non-zero")
    half = 0.5 * angle_rad
    s = math.sin(half) / n
    return np.array([math.cos(half), axis[0] * s, axis[1] * s, axis[2] * s])


def quat_from_yaw(angle_rad: float) -> np.ndarray:
    return quat_from_axis_angle(np.array([0.0, 0.0, 1.0]), angle_rad)


def quat_from_rpy(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Intrinsic Z-Y-X euler angles (radians) to quaternion: R = Rz(yaw) Ry(pitch) Rx(roll)."""
    qz = quat_from_axis_angle(np.array([0.0, 0.0, 1.0]), yaw)
    qy = quat_from_axis_angle(np.array([0.0, 1.0, 0.0]), pitch)
    qx = quat_from_axis_angle(np.array([1.0, 0.0, 0.0]), roll)
    return quat_mul(quat_mul(qz, qy), qx)


def quat_angle(a: np.ndarray, b: np.ndarray) -> float:
    """Geodesic angle (radians) between two unit quaternions, sign-insensitive."""
    d = abs(float(np.dot(a, b)))
    d = min(1.0, d)
    return 2.0 * math.acos(d)


def rotation_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform: position (meters, world or parent frame) + unit quaternion (w,x,y,z)."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.position, dtype=np.float64).reshape(3).copy()
        q = np.asarray(self.orientation, dtype=np.float64).reshape(4).copy()
        if not np.isfinite(p).all():
            raise ValueError("pose position must be finite")
        n = math.sqrt(float(np.dot(q, q)))
        if not math.isfinite(n) or abs(n - 1.0) > QUAT_NORM_TOL:
            raise ValueError(f"quaternion norm {n!r} not within {QUAT_NORM_TOL} of 1")
        p.setflags(write=False)
        q.setflags(write=False)
        object.__setattr__(self, "position", p)
        object.__setattr__(self, "orientation", q)

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]))

    @staticmethod
    def from_parts(x: float, y: float, z: float, q: np.ndarray | None = None) -> "Pose":
        if q is None:
            q = np.array([1.0, 0.0, 0.0, 0.0])
        return Pose(np.array([x, y, z], dtype=np.float64), quat_normalize(q))

    def approx_equal(self, other: "Pose", tol: float = 1e-9) -> bool:
        if np.max(np.abs(self.position - other.position)) > tol:
            return False
        # componentwise up to sign; quat_angle's acos cannot resolve below ~1e-8
        diff = min(
            np.max(np.abs(self.orientation - other.orientation)),
            np.max(np.abs(self.orientation + other.orientation)),
        )
        return diff <= tol


def compose(a: Pose, b: Pose) -> Pose:
    """Apply b in a's frame: result maps a point p to a * (b * p)."""
    pos = a.position + quat_rotate(a.orientation, b.position)
    q = quat_normalize(quat_mul(a.orientation, b.orientation))
    return Pose(pos, q)


def invert(p: Pose) -> Pose:
    qi = quat_conjugate(p.orientation)
    return Pose(-quat_rotate(qi, p.position), qi)


def transform_point(p: Pose, point: np.ndarray) -> np.ndarray:
    return p.position + quat_rotate(p.orientation, np.asarray(point, dtype=np.float64))


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera: intrinsics in pixels, extrinsic pose camera-in-world, zero skew."""

    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    extrinsic: Pose

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")


def project_point(cam: CameraModel, point_world: np.ndarray) -> np.ndarray:
    """Project a world point to real-valued pixel (u, v).

    Raises BehindCamera when the camera-frame depth is <= MIN_DEPTH. The
    result is intentionally unclipped; pixel clamping belongs to callers
    (the renderer clips, the tokenizer clamps).
    """
    cam_in_world = cam.extrinsic
    rel = np.asarray(point_world, dtype=np.float64) - cam_in_world.position
    p_cam = quat_rotate(quat_conjugate(cam_in_world.orientation), rel)
    z = p_cam[2]
    if z <= MIN_DEPTH:
        raise BehindCamera(f"camera-frame depth {z:.3g} <= {MIN_DEPTH}")
    u = cam.fx * p_cam[0] / z + cam.cx
    v = cam.fy * p_cam[1] / z + cam.cy
    return np.array([u, v])


@dataclass(frozen=True)
class GripperGeometry:
    """The four outline points of the hand, in the EE frame (meters)."""

    left_tip: np.ndarray
    right_tip: np.ndarray
    top: np.ndarray
    arm: np.ndarray

    def __post_init__(self):
        for name in ("left_tip", "right_tip", "top", "arm"):
            v = np.asarray(getattr(self, name), dtype=np.float64).reshape(3).copy()
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        if not self.left_tip[0] < self.right_tip[0]:
            raise ValueError("left_tip.x must be < right_tip.x")
        pts = [self.left_tip, self.right_tip, self.top, self.arm]
        for i in range(4):
            for j in range(i + 1, 4):
                if np.array_equal(pts[i], pts[j]):
                    raise ValueError("gripper outline points must be distinct")

    def as_array(self) -> np.ndarray:
        return np.stack([self.left_tip, self.right_tip, self.top, self.arm])


# Stand-in parallel-jaw dimensions; override via the camera/gripper config file.
DEFAULT_GRIPPER_GEOMETRY = GripperGeometry(
    left_tip=np.array([-0.04, 0.0, 0.10]),
    right_tip=np.array([0.04, 0.0, 0.10]),
    top=np.array([0.0, 0.0, 0.02]),
    arm=np.array([0.0, 0.0, -0.08]),
)

# Segment connectivity of the outline: left->top, top->right, top->arm.
OUTLINE_SEGMENTS: tuple[tuple[int, int], ...] = ((0, 2), (2, 1), (2, 3))


@dataclass(frozen=True)
class GripperOutline:
    """Projected outline: 4 real-valued pixels (left, right, top, arm) + fixed connectivity."""

    points: np.ndarray  # (4, 2) float pixels
    segments: tuple[tuple[int, int], ...] = field(default=OUTLINE_SEGMENTS)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(4, 2).copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.segments != OUTLINE_SEGMENTS:
            raise ValueError("outline connectivity is fixed")


def gripper_keypoints(ee_pose: Pose, geom: GripperGeometry) -> np.ndarray:
    """World positions of the four outline points, order (left, right, top, arm)."""
    r = rotation_matrix(ee_pose.orientation)
    return ee_pose.position + geom.as_array() @ r.T


def project_outline(cam: CameraModel, ee_pose: Pose, geom: GripperGeometry) -> GripperOutline:
    """Project the hand outline at ee_pose; BehindCamera if any keypoint has z <= MIN_DEPTH."""
    pts = gripper_keypoints(ee_pose, geom)
    pixels = np.empty((4, 2))
    for i in range(4):
        pixels[i] = project_point(cam, pts[i])
    return GripperOutline(points=pixels)
