"""Overlaying gripper outlines onto images and the tokenized-text plan form.

Rendering is integer-only (1px Bresenham, no anti-aliasing) so overlays are
bit-identical across runs and platforms. Waypoint colors follow the
golden-angle hue rule, which stays injective for any practical plan length.

The text grammar (one line, waypoints joined by '|'):

    W<i>:<kind>;L=(u,v);R=(u,v);T=(u,v);A=(u,v)

with u, v projected pixels rounded half-up to integers and clamped to the
image rectangle. Waypoints with any keypoint behind the camera are tokenized
with the sentinel pair (-1,-1) for all four points.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage

from . import kernels
from .extraction import WAYPOINT_KINDS, AffordancePlan
from .geometry import (
    OUTLINE_SEGMENTS,
    BehindCamera,
    CameraModel,
    GripperGeometry,
    Pose,
    project_outline,
)

logger = logging.getLogger(__name__)

GOLDEN_ANGLE_DEG = 137.508

POINT_LABELS = ("L", "R", "T", "A")
SENTINEL = (-1, -1)


class DimensionMismatch(Exception):
    """Image dimensions disagree with the camera model."""


class ParseError(Exception):
    """Plan text violates the grammar; carries the byte offset of the defect."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


@dataclass(frozen=True)
class Image:
    """Row-major RGB8 raster; pixels has shape (height, width, 3) uint8."""

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.shape != (self.height, self.width, 3):
            raise ValueError(
                f"pixel buffer shape {px.shape} != ({self.height}, {self.width}, 3)"
            )
        object.__setattr__(self, "pixels", px)

    @staticmethod
    def blank(width: int, height: int, color: tuple[int, int, int] = (0, 0, 0)) -> "Image":
        px = np.empty((height, width, 3), dtype=np.uint8)
        px[:] = np.asarray(color, dtype=np.uint8)
        return Image(width, height, px)

    def copy(self) -> "Image":
        return Image(self.width, self.height, self.pixels.copy())


def load_png(path) -> Image:
    with PILImage.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return Image(width=arr.shape[1], height=arr.shape[0], pixels=arr)


def save_png(img: Image, path) -> None:
    PILImage.fromarray(img.pixels, mode="RGB").save(path, format="PNG")


def png_bytes(img: Image) -> bytes:
    import io

    buf = io.BytesIO()
    PILImage.fromarray(img.pixels, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def palette_color(index: int) -> tuple[int, int, int]:
    """Waypoint color i: hue (i * golden angle) mod 360 at full saturation/value."""
    hue = (index * GOLDEN_ANGLE_DEG) % 360.0
    sector = hue / 60.0
    i = int(sector) % 6
    f = sector - int(sector)
    # s = v = 1: p = 0, q = 1 - f, t = f
    q = 1.0 - f
    t = f
    rgb_f = (
        (1.0, t, 0.0),
        (q, 1.0, 0.0),
        (0.0, 1.0, t),
        (0.0, q, 1.0),
        (t, 0.0, 1.0),
        (1.0, 0.0, q),
    )[i]
    return tuple(int(round(255.0 * c)) for c in rgb_f)


def round_pixel(u: float, v: float) -> tuple[int, int]:
    """Half-up rounding, the single quantization rule shared by raster and text paths."""
    return int(np.floor(u + 0.5)), int(np.floor(v + 0.5))


def _clamp_pixel(px: tuple[int, int], width: int, height: int) -> tuple[int, int]:
    return min(max(px[0], 0), width - 1), min(max(px[1], 0), height - 1)


def overlay(
    img: Image, cam: CameraModel, plan: AffordancePlan, geom: GripperGeometry
) -> Image:
    """Render the plan's gripper outlines onto a copy of img.

    Each waypoint contributes its three outline segments in its palette
    color, clipped to bounds. Waypoints behind the camera are skipped with a
    warning. Pixels off the rasterized segments are byte-identical to the
    input, which stays unmodified.
    """
    if (img.width, img.height) != (cam.width, cam.height):
        raise DimensionMismatch(
            f"image {img.width}x{img.height} vs camera {cam.width}x{cam.height}"
        )
    out = img.copy()
    for i, wp in enumerate(plan.waypoints):
        try:
            outline = project_outline(cam, wp.pose, geom)
        except BehindCamera:
            logger.warning("waypoint %d (%s) behind camera; skipped in overlay", i, wp.kind)
            continue
        pts = [round_pixel(u, v) for u, v in outline.points]
        segments = np.array(
            [[pts[a][0], pts[a][1], pts[b][0], pts[b][1]] for a, b in OUTLINE_SEGMENTS],
            dtype=np.int64,
        )
        kernels.draw_segments(out.pixels, segments, palette_color(i))
    return out


@dataclass(frozen=True)
class PixelWaypoint:
    """One waypoint of a plan quantized to image space: kind + the 4 outline pixels."""

    kind: str
    points: tuple[tuple[int, int], ...]  # (left, right, top, arm)

    def __post_init__(self):
        if self.kind not in WAYPOINT_KINDS:
            raise ValueError(f"unknown waypoint kind {self.kind!r}")
        if len(self.points) != 4:
            raise ValueError("pixel waypoint needs exactly 4 points")
        object.__setattr__(self, "points", tuple(tuple(p) for p in self.points))


def plan_to_pixels(
    plan: AffordancePlan, cam: CameraModel, geom: GripperGeometry
) -> list[PixelWaypoint]:
    """Quantized pixel form of a plan: rounded then clamped, sentinel when behind camera."""
    out = []
    for wp in plan.waypoints:
        try:
            outline = project_outline(cam, wp.pose, geom)
        except BehindCamera:
            out.append(PixelWaypoint(kind=wp.kind, points=(SENTINEL,) * 4))
            continue
        pts = tuple(
            _clamp_pixel(round_pixel(u, v), cam.width, cam.height) for u, v in outline.points
        )
        out.append(PixelWaypoint(kind=wp.kind, points=pts))
    return out


def tokenize_plan(plan: AffordancePlan, cam: CameraModel, geom: GripperGeometry) -> str:
    """Single-line token form of the plan; empty plans yield the empty string."""
    parts = []
    for i, pw in enumerate(plan_to_pixels(plan, cam, geom)):
        coords = ";".join(
            f"{label}=({p[0]},{p[1]})" for label, p in zip(POINT_LABELS, pw.points)
        )
        parts.append(f"W{i}:{pw.kind};{coords}")
    return "|".join(parts)


_WAYPOINT_RE = re.compile(
    r"W(\d+):(\w+);"
    r"L=\((-?\d+),(-?\d+)\);"
    r"R=\((-?\d+),(-?\d+)\);"
    r"T=\((-?\d+),(-?\d+)\);"
    r"A=\((-?\d+),(-?\d+)\)$"
)


def parse_plan_text(text: str) -> list[PixelWaypoint]:
    """Exact inverse of tokenize_plan's serialization, into pixel waypoints."""
    if text == "":
        return []
    out = []
    offset = 0
    for idx, chunk in enumerate(text.split("|")):
        m = _WAYPOINT_RE.match(chunk)
        if m is None:
            raise ParseError(f"malformed waypoint token {chunk!r}", offset)
        if int(m.group(1)) != idx:
            raise ParseError(f"waypoint index {m.group(1)} out of order (expected {idx})", offset)
        kind = m.group(2)
        if kind not in WAYPOINT_KINDS:
            raise ParseError(f"unknown kind {kind!r}", offset + m.start(2))
        nums = [int(m.group(k)) for k in range(3, 11)]
        points = tuple((nums[j], nums[j + 1]) for j in range(0, 8, 2))
        out.append(PixelWaypoint(kind=kind, points=points))
        offset += len(chunk) + 1
    return out
