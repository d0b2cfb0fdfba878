from __future__ import annotations

import math

import numpy as np
import pytest

from affordkit.geometry import (
    DEFAULT_GRIPPER_GEOMETRY,
    OUTLINE_SEGMENTS,
    BehindCamera,
    CameraModel,
    Pose,
    compose,
    gripper_keypoints,
    invert,
    project_outline,
    project_point,
    quat_from_yaw,
    quat_normalize,
)

from .util import pinhole_oracle, pose_to_homogeneous, random_pose


def make_cam(extrinsic=None, fx=100.0, fy=100.0, cx=64.0, cy=64.0, w=128, h=128):
    return CameraModel(fx, fy, cx, cy, w, h, extrinsic or Pose.identity())


class TestPoseAlgebra:
    def test_identity_is_two_sided_neutral(self):
        rng = np.random.default_rng(0)
        p = random_pose(rng)
        for q in (compose(Pose.identity(), p), compose(p, Pose.identity())):
            assert q.approx_equal(p)

    def test_compose_with_inverse_is_identity(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            p = random_pose(rng)
            assert compose(p, invert(p)).approx_equal(Pose.identity(), tol=1e-9)
            assert compose(invert(p), p).approx_equal(Pose.identity(), tol=1e-9)

    def test_yaw_then_translate(self):
        # yaw(90 deg) at (1,0,0) composed with translate(1,0,0): the local +x
        # axis points along world +y, so the result sits at (1,1,0).
        a = Pose(np.array([1.0, 0.0, 0.0]), quat_from_yaw(math.pi / 2))
        b = Pose(np.array([1.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0, 0.0]))
        c = compose(a, b)
        np.testing.assert_allclose(c.position, [1.0, 1.0, 0.0], atol=1e-12)

    def test_invert_pure_translation(self):
        p = Pose(np.array([1.0, 2.0, 3.0]), np.array([1.0, 0.0, 0.0, 0.0]))
        np.testing.assert_allclose(invert(p).position, [-1.0, -2.0, -3.0])

    def test_compose_matches_homogeneous_matrix_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            a, b = random_pose(rng), random_pose(rng)
            got = pose_to_homogeneous(compose(a, b))
            want = pose_to_homogeneous(a) @ pose_to_homogeneous(b)
            np.testing.assert_allclose(got, want, atol=1e-9)

    def test_compose_associative(self):
        rng = np.random.default_rng(3)
        for _ in range(50):
            a, b, c = (random_pose(rng) for _ in range(3))
            lhs = compose(compose(a, b), c)
            rhs = compose(a, compose(b, c))
            assert lhs.approx_equal(rhs, tol=1e-9)

    def test_pose_validation(self):
        with pytest.raises(ValueError):
            Pose(np.array([0.0, np.inf, 0.0]), np.array([1.0, 0.0, 0.0, 0.0]))
        with pytest.raises(ValueError):
            Pose(np.zeros(3), np.array([1.0, 1.0, 0.0, 0.0]))


class TestProjection:
    def test_principal_axis_point(self):
        cam = make_cam()
        np.testing.assert_array_equal(project_point(cam, np.array([0.0, 0.0, 1.0])), [64, 64])

    def test_hand_computed_pixel(self):
        cam = make_cam()
        np.testing.assert_allclose(
            project_point(cam, np.array([0.1, 0.2, 1.0])), [74.0, 84.0], atol=1e-12
        )

    def test_negative_depth_raises(self):
        cam = make_cam()
        with pytest.raises(BehindCamera):
            project_point(cam, np.array([0.0, 0.0, -1.0]))
        with pytest.raises(BehindCamera):
            project_point(cam, np.array([0.0, 0.0, 0.0]))

    def test_principal_axis_exact_for_any_depth(self):
        # With identity extrinsic the camera frame is the world frame, so the
        # u = fx*0/z + cx arithmetic must be exact, not approximately equal.
        for fx, fy, cx, cy in [(100, 100, 64, 64), (310.5, 290.25, 111.0, 97.5)]:
            cam = make_cam(fx=fx, fy=fy, cx=cx, cy=cy, w=256, h=256)
            for z in (1e-6, 0.37, 1.0, 5.0, 1e4):
                uv = project_point(cam, np.array([0.0, 0.0, z]))
                assert uv[0] == cx and uv[1] == cy

    def test_ray_scale_invariance(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            cam = make_cam(extrinsic=random_pose(rng))
            direction = rng.normal(size=3)
            probe = cam.extrinsic.position + direction
            try:
                base = project_point(cam, probe)
            except BehindCamera:
                continue
            for lam in (0.25, 0.5, 2.0, 10.0):
                scaled = cam.extrinsic.position + lam * direction
                np.testing.assert_allclose(project_point(cam, scaled), base, atol=1e-9)

    def test_random_cameras_match_pinhole_oracle(self):
        rng = np.random.default_rng(5)
        checked = 0
        while checked < 200:
            cam = make_cam(extrinsic=random_pose(rng))
            point = rng.uniform(-3, 3, size=3)
            try:
                got = project_point(cam, point)
            except BehindCamera:
                continue
            np.testing.assert_allclose(got, pinhole_oracle(cam, point), atol=1e-9)
            checked += 1

    def test_camera_validation(self):
        with pytest.raises(ValueError):
            make_cam(fx=-1.0)
        with pytest.raises(ValueError):
            make_cam(cx=128.0)


class TestGripperOutline:
    def test_keypoints_identity(self):
        pts = gripper_keypoints(Pose.identity(), DEFAULT_GRIPPER_GEOMETRY)
        np.testing.assert_allclose(pts, DEFAULT_GRIPPER_GEOMETRY.as_array())

    def test_keypoints_translation_equivariance(self):
        t = np.array([0.3, -0.2, 0.5])
        pts = gripper_keypoints(
            Pose(t, np.array([1.0, 0.0, 0.0, 0.0])), DEFAULT_GRIPPER_GEOMETRY
        )
        np.testing.assert_allclose(pts, DEFAULT_GRIPPER_GEOMETRY.as_array() + t)

    def test_keypoints_yaw_rotation(self):
        # yaw(90 deg) sends (x, y, z) to (-y, x, z)
        pts = gripper_keypoints(
            Pose(np.zeros(3), quat_from_yaw(math.pi / 2)), DEFAULT_GRIPPER_GEOMETRY
        )
        base = DEFAULT_GRIPPER_GEOMETRY.as_array()
        expected = np.stack([-base[:, 1], base[:, 0], base[:, 2]], axis=1)
        np.testing.assert_allclose(pts, expected, atol=1e-12)

    def test_keypoints_commute_with_composition(self):
        rng = np.random.default_rng(6)
        for _ in range(25):
            a, b = random_pose(rng), random_pose(rng)
            lhs = gripper_keypoints(compose(a, b), DEFAULT_GRIPPER_GEOMETRY)
            rhs = np.stack(
                [
                    a.position
                    + pose_to_homogeneous(a)[:3, :3] @ p
                    for p in gripper_keypoints(b, DEFAULT_GRIPPER_GEOMETRY)
                ]
            )
            np.testing.assert_allclose(lhs, rhs, atol=1e-9)

    def test_outline_on_principal_axis(self):
        cam = make_cam()
        ee = Pose(np.array([0.0, 0.0, 1.0]), np.array([1.0, 0.0, 0.0, 0.0]))
        outline = project_outline(cam, ee, DEFAULT_GRIPPER_GEOMETRY)
        assert outline.points.shape == (4, 2)
        assert outline.segments == OUTLINE_SEGMENTS
        # per-point pinhole oracle at depth 1 + geometry offsets
        for i, off in enumerate(DEFAULT_GRIPPER_GEOMETRY.as_array()):
            want = pinhole_oracle(cam, np.array([off[0], off[1], 1.0 + off[2]]))
            np.testing.assert_allclose(outline.points[i], want, atol=1e-9)
        # left/right tips symmetric about cx
        left, right = outline.points[0], outline.points[1]
        assert left[0] + right[0] == pytest.approx(2 * cam.cx)
        assert left[1] == pytest.approx(right[1])

    def test_outline_depth_scaling(self):
        # A flat gripper (all points in the EE z=0 plane) halves its pixel
        # offsets from the principal point when depth doubles.
        from affordkit.geometry import GripperGeometry

        flat = GripperGeometry(
            left_tip=np.array([-0.04, 0.01, 0.0]),
            right_tip=np.array([0.04, 0.01, 0.0]),
            top=np.array([0.0, -0.03, 0.0]),
            arm=np.array([0.0, 0.05, 0.0]),
        )
        cam = make_cam()
        center = np.array([cam.cx, cam.cy])
        near = project_outline(cam, Pose.from_parts(0, 0, 1.0), flat).points - center
        far = project_outline(cam, Pose.from_parts(0, 0, 2.0), flat).points - center
        np.testing.assert_allclose(far, near / 2.0, atol=1e-9)

    def test_outline_behind_camera(self):
        cam = make_cam()
        with pytest.raises(BehindCamera):
            project_outline(cam, Pose.from_parts(0, 0, -1.0), DEFAULT_GRIPPER_GEOMETRY)
