from __future__ import annotations

import logging
import math

import numpy as np
import pytest

from affordkit.extraction import AffordancePlan, Waypoint
from affordkit.geometry import (
    DEFAULT_GRIPPER_GEOMETRY,
    OUTLINE_SEGMENTS,
    CameraModel,
    Pose,
    project_outline,
    quat_from_axis_angle,
)
from affordkit.render import (
    DimensionMismatch,
    Image,
    ParseError,
    PixelWaypoint,
    load_png,
    overlay,
    palette_color,
    parse_plan_text,
    plan_to_pixels,
    round_pixel,
    save_png,
    tokenize_plan,
)

# Regenerated from the independent pinhole/rodrigues oracle below
# (test_golden_string_matches_oracle); do not edit by hand.
GOLDEN_TEXT = "W0:final;L=(61,67);R=(67,67);T=(64,62);A=(64,56)"


def mount_cam() -> CameraModel:
    # 45-degree downward mount behind the table edge, looking toward +y
    q = quat_from_axis_angle(np.array([1.0, 0.0, 0.0]), math.radians(-135))
    return CameraModel(100, 100, 64, 64, 128, 128, Pose(np.array([0.0, -0.85, 1.25]), q))


def grasp_pose(x=0.0, y=0.0, z=0.45) -> Pose:
    return Pose(np.array([x, y, z]), np.array([0.0, 1.0, 0.0, 0.0]))


def single_waypoint_plan(pose=None, kind="final") -> AffordancePlan:
    return AffordancePlan(waypoints=(Waypoint(pose or grasp_pose(), kind, 0),))


def oracle_line_pixels(x0, y0, x1, y1):
    """Independent rasterization: greedy walk minimizing the implicit line error."""
    sx = 1 if x1 > x0 else -1
    sy = 1 if y1 > y0 else -1
    dx, dy = abs(x1 - x0), abs(y1 - y0)

    def err(px, py):
        return abs((px - x0) * dy * sx - (py - y0) * dx * sy)

    pts = [(x0, y0)]
    x, y = x0, y0
    while (x, y) != (x1, y1):
        cands = []
        if x != x1 and y != y1:
            cands.append((x + sx, y + sy))
        if x != x1:
            cands.append((x + sx, y))
        if y != y1:
            cands.append((x, y + sy))
        x, y = min(cands, key=lambda c: err(*c))
        pts.append((x, y))
    return pts


def oracle_outline_pixels(cam, pose, in_bounds=True):
    """Pixel set of the three outline segments, via the greedy-walk oracle."""
    outline = project_outline(cam, pose, DEFAULT_GRIPPER_GEOMETRY)
    pts = [round_pixel(u, v) for u, v in outline.points]
    pix = set()
    for a, b in OUTLINE_SEGMENTS:
        pix.update(oracle_line_pixels(*pts[a], *pts[b]))
    if in_bounds:
        pix = {(x, y) for x, y in pix if 0 <= x < cam.width and 0 <= y < cam.height}
    return pix


def random_plan(rng, cam, n=None) -> AffordancePlan:
    n = n or int(rng.integers(1, 5))
    waypoints = []
    for i in range(n):
        pos = np.array([rng.uniform(-0.4, 0.4), rng.uniform(-0.3, 0.3), rng.uniform(0.35, 0.8)])
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        kind = "final" if i == n - 1 else str(rng.choice(["close", "open"]))
        waypoints.append(Waypoint(Pose(pos, q), kind, i))
    return AffordancePlan(waypoints=tuple(waypoints))


class TestPalette:
    def test_injective_for_first_eight(self):
        colors = [palette_color(i) for i in range(8)]
        assert len(set(colors)) == 8

    def test_full_saturation_value(self):
        for i in range(8):
            c = palette_color(i)
            assert max(c) == 255
            assert min(c) == 0


class TestOverlay:
    def test_empty_plan_is_identity(self):
        img = Image.blank(128, 128, (9, 120, 33))
        out = overlay(img, mount_cam(), AffordancePlan(waypoints=()), DEFAULT_GRIPPER_GEOMETRY)
        assert np.array_equal(out.pixels, img.pixels)
        assert out.pixels is not img.pixels

    def test_input_unmodified(self):
        img = Image.blank(128, 128)
        before = img.pixels.copy()
        overlay(img, mount_cam(), single_waypoint_plan(), DEFAULT_GRIPPER_GEOMETRY)
        assert np.array_equal(img.pixels, before)

    def test_single_waypoint_changes_exactly_the_oracle_set(self):
        cam = mount_cam()
        img = Image.blank(128, 128, (10, 20, 30))
        out = overlay(img, cam, single_waypoint_plan(), DEFAULT_GRIPPER_GEOMETRY)
        diff = np.nonzero((out.pixels != img.pixels).any(axis=2))
        changed = {(int(x), int(y)) for y, x in zip(*diff)}
        assert changed == oracle_outline_pixels(cam, grasp_pose())
        color = np.array(palette_color(0), dtype=np.uint8)
        for x, y in changed:
            assert np.array_equal(out.pixels[y, x], color)

    def test_two_waypoints_use_two_colors(self):
        cam = mount_cam()
        plan = AffordancePlan(
            waypoints=(
                Waypoint(grasp_pose(-0.15, 0.0), "close", 0),
                Waypoint(grasp_pose(0.15, 0.1), "final", 1),
            )
        )
        out = overlay(Image.blank(128, 128), cam, plan, DEFAULT_GRIPPER_GEOMETRY)
        present = {tuple(px) for px in out.pixels.reshape(-1, 3)}
        assert palette_color(0) in present
        assert palette_color(1) in present

    def test_bit_identical_across_runs(self):
        cam = mount_cam()
        rng = np.random.default_rng(11)
        plan = random_plan(rng, cam)
        img = Image.blank(128, 128, (3, 3, 3))
        a = overlay(img, cam, plan, DEFAULT_GRIPPER_GEOMETRY)
        b = overlay(img, cam, plan, DEFAULT_GRIPPER_GEOMETRY)
        assert np.array_equal(a.pixels, b.pixels)

    def test_locality_on_random_plans(self):
        cam = mount_cam()
        rng = np.random.default_rng(12)
        img = Image.blank(128, 128, (40, 40, 40))
        for _ in range(25):
            plan = random_plan(rng, cam)
            out = overlay(img, cam, plan, DEFAULT_GRIPPER_GEOMETRY)
            allowed = set()
            for wp in plan.waypoints:
                try:
                    allowed |= oracle_outline_pixels(cam, wp.pose)
                except Exception:
                    continue
            diff = np.nonzero((out.pixels != img.pixels).any(axis=2))
            changed = {(int(x), int(y)) for y, x in zip(*diff)}
            assert changed <= allowed

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            overlay(Image.blank(64, 64), mount_cam(), single_waypoint_plan(), DEFAULT_GRIPPER_GEOMETRY)

    def test_behind_camera_waypoint_skipped_with_warning(self, caplog):
        cam = mount_cam()
        behind = Pose(
            cam.extrinsic.position + np.array([0.0, -1.0, 1.0]), np.array([0.0, 1.0, 0.0, 0.0])
        )
        plan = AffordancePlan(
            waypoints=(Waypoint(behind, "close", 0), Waypoint(grasp_pose(), "final", 1))
        )
        img = Image.blank(128, 128)
        with caplog.at_level(logging.WARNING, logger="affordkit.render"):
            out = overlay(img, cam, plan, DEFAULT_GRIPPER_GEOMETRY)
        assert any("behind camera" in r.message for r in caplog.records)
        # remaining waypoint still rendered, in its own index color
        diff = np.nonzero((out.pixels != img.pixels).any(axis=2))
        changed = {(int(x), int(y)) for y, x in zip(*diff)}
        assert changed == oracle_outline_pixels(cam, grasp_pose())
        for x, y in changed:
            assert tuple(out.pixels[y, x]) == palette_color(1)


class TestTokenize:
    def test_empty_plan_empty_string(self):
        assert tokenize_plan(AffordancePlan(waypoints=()), mount_cam(), DEFAULT_GRIPPER_GEOMETRY) == ""

    def test_golden_string_matches_oracle(self):
        """Regenerate the golden string from an independent rodrigues/pinhole oracle."""
        from .util import rodrigues

        cam = mount_cam()
        r_ee = rodrigues([1.0, 0.0, 0.0], math.pi)
        r_cam = rodrigues([1.0, 0.0, 0.0], math.radians(-135))
        labels = ("L", "R", "T", "A")
        parts = []
        for label, off in zip(labels, DEFAULT_GRIPPER_GEOMETRY.as_array()):
            world = np.array([0.0, 0.0, 0.45]) + r_ee @ off
            p_cam = r_cam.T @ (world - cam.extrinsic.position)
            u = cam.fx * p_cam[0] / p_cam[2] + cam.cx
            v = cam.fy * p_cam[1] / p_cam[2] + cam.cy
            ui = min(max(int(np.floor(u + 0.5)), 0), cam.width - 1)
            vi = min(max(int(np.floor(v + 0.5)), 0), cam.height - 1)
            parts.append(f"{label}=({ui},{vi})")
        oracle_text = "W0:final;" + ";".join(parts)
        assert oracle_text == GOLDEN_TEXT
        assert tokenize_plan(single_waypoint_plan(), cam, DEFAULT_GRIPPER_GEOMETRY) == GOLDEN_TEXT

    def test_behind_camera_sentinel(self):
        cam = mount_cam()
        behind = Pose(
            cam.extrinsic.position + np.array([0.0, -1.0, 1.0]), np.array([0.0, 1.0, 0.0, 0.0])
        )
        text = tokenize_plan(single_waypoint_plan(pose=behind), cam, DEFAULT_GRIPPER_GEOMETRY)
        assert text == "W0:final;L=(-1,-1);R=(-1,-1);T=(-1,-1);A=(-1,-1)"

    def test_clamping_to_image_bounds(self):
        cam = mount_cam()
        off_frame = grasp_pose(x=5.0)
        text = tokenize_plan(single_waypoint_plan(pose=off_frame), cam, DEFAULT_GRIPPER_GEOMETRY)
        coords = [int(n) for n in __import__("re").findall(r"-?\d+", text.split(":", 1)[1])]
        assert all(0 <= c <= 127 for c in coords)


class TestParse:
    def test_empty_string(self):
        assert parse_plan_text("") == []

    def test_golden_round_trip(self):
        parsed = parse_plan_text(GOLDEN_TEXT)
        assert parsed == [
            PixelWaypoint(kind="final", points=((61, 67), (67, 67), (64, 62), (64, 56)))
        ]

    def test_unknown_kind_rejected(self):
        with pytest.raises(ParseError):
            parse_plan_text("W0:grab;L=(1,1);R=(2,2);T=(3,3);A=(4,4)")

    def test_parse_error_carries_byte_offset(self):
        good = GOLDEN_TEXT
        with pytest.raises(ParseError) as e:
            parse_plan_text(good + "|W1:close;L=(1,1);R=(2")
        assert e.value.offset == len(good) + 1

    def test_index_out_of_order(self):
        with pytest.raises(ParseError):
            parse_plan_text("W1:final;L=(1,1);R=(2,2);T=(3,3);A=(4,4)")

    def test_round_trip_random_plans(self):
        cam = mount_cam()
        rng = np.random.default_rng(13)
        for _ in range(100):
            plan = random_plan(rng, cam)
            text = tokenize_plan(plan, cam, DEFAULT_GRIPPER_GEOMETRY)
            assert parse_plan_text(text) == plan_to_pixels(plan, cam, DEFAULT_GRIPPER_GEOMETRY)


class TestPng:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(14)
        img = Image(32, 16, rng.integers(0, 256, size=(16, 32, 3)).astype(np.uint8))
        p = tmp_path / "img.png"
        save_png(img, p)
        back = load_png(p)
        assert (back.width, back.height) == (32, 16)
        assert np.array_equal(back.pixels, img.pixels)
