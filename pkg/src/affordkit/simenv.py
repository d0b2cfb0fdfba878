"""Kinematic tabletop world: scripted demos, rollouts, snapshots, success checks.

There is no contact dynamics here on purpose: objects attach to the gripper
when it closes near their graspable part and follow it rigidly until
released. Articulated objects (cubby, faucet) keep their base fixed; while
their handle is held, end-effector motion projected onto the articulation
axis drives the joint value instead.

World frame: +Z up, table top at ``table_height``. Objects rest on the
table; their pose is the bbox center frame. The default camera sits behind
the table edge looking 45 degrees down toward +y.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .extraction import Action, Frame, ObjectAnnotation, Trajectory
from .geometry import (
    BehindCamera,
    CameraModel,
    Pose,
    compose,
    invert,
    project_point,
    quat_angle,
    quat_from_axis_angle,
    quat_from_yaw,
    quat_mul,
    quat_normalize,
    quat_rotate,
)
from .render import Image, round_pixel

TABLE_HEIGHT = 0.4
TABLE_X_RANGE = (-0.25, 0.25)
TABLE_Y_RANGE = (-0.18, 0.18)
TABLE_DRAW_RECT = (-0.36, 0.36, -0.30, 0.30)  # xmin, xmax, ymin, ymax

VARIATIONS = ("in_dist", "novel_object", "camera_shift", "background_shift")
VERBS = ("pick", "place", "close", "turn")

BACKGROUND_TAGS = ("gray", "wood", "dark", "blue")
TABLE_COLORS = {
    "gray": (120, 120, 120),
    "wood": (150, 110, 70),
    "dark": (60, 60, 66),
    "blue": (80, 100, 150),
}
VOID_COLOR = (30, 30, 34)
EE_COLOR = (255, 255, 255)

TEXTURE_TAGS = ("plain", "matte", "gloss", "striped")

# Quaternion flipping EE +Z onto world -Z: the canonical top-down grasp.
TOPDOWN_Q = np.array([0.0, 1.0, 0.0, 0.0])

# Instance perturbation bands for the graspable part (meters, xy plane).
SEEN_PART_JITTER = 0.01  # per-axis uniform, seen instances
NOVEL_PART_SHIFT = (0.035, 0.06)  # radial magnitude band, held-out instances


class PlacementFailure(Exception):
    """Rejection sampling could not place the scene without overlap."""


class InfeasibleTask(Exception):
    """The scene lacks what the task needs (target, receptacle, articulation)."""


@dataclass(frozen=True)
class SimConfig:
    """Invented tolerances; the paper's claims do not depend on their values."""

    attach_radius: float = 0.02
    attach_angle_deg: float = 20.0
    max_step_m: float = 0.05
    max_gripper_rate: float = 0.2
    aperture_threshold: float = 0.5
    lift_height: float = 0.15
    articulation_tol: float = 0.005


DEFAULT_SIM_CONFIG = SimConfig()


@dataclass(frozen=True)
class Articulation:
    axis: np.ndarray  # unit, object frame
    lo: float
    hi: float
    current: float

    def __post_init__(self):
        ax = np.asarray(self.axis, dtype=np.float64).reshape(3).copy()
        ax /= np.linalg.norm(ax)
        ax.setflags(write=False)
        object.__setattr__(self, "axis", ax)
        if not self.lo <= self.current <= self.hi:
            raise ValueError("articulation value outside range")


@dataclass(frozen=True)
class SimObject:
    id: str
    category: str
    pose: Pose
    part_offset: Pose
    half_extents: np.ndarray
    texture: str = "plain"
    articulation: Articulation | None = None

    def __post_init__(self):
        he = np.asarray(self.half_extents, dtype=np.float64).reshape(3).copy()
        if not (he > 0).all():
            raise ValueError("half extents must be positive")
        he.setflags(write=False)
        object.__setattr__(self, "half_extents", he)


@dataclass(frozen=True)
class TaskSpec:
    verb: str
    target: str
    receptacle: str | None = None
    language: str = ""

    def __post_init__(self):
        if self.verb not in VERBS:
            raise ValueError(f"unknown verb {self.verb!r}")
        if self.verb == "place" and not self.receptacle:
            raise ValueError("place tasks need a receptacle")
        if not self.language:
            object.__setattr__(self, "language", default_language(self.verb, self.target, self.receptacle))


def default_language(verb: str, target: str, receptacle: str | None = None) -> str:
    noun = target.replace("_", " ")
    if verb == "pick":
        return f"pick the {noun}"
    if verb == "place":
        prep = "onto" if receptacle == "plate" else "into"
        return f"place the {noun} {prep} the {receptacle.replace('_', ' ')}"
    return f"{verb} the {noun}"


@dataclass(frozen=True)
class Scene:
    objects: tuple[SimObject, ...]
    ee_pose: Pose
    gripper: float
    camera: CameraModel
    attached: str | None = None
    grasp_offset: Pose | None = None  # attached object pose in the EE frame
    table_height: float = TABLE_HEIGHT
    background: str = "gray"
    step_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        if not 0.0 <= self.gripper <= 1.0:
            raise ValueError("gripper aperture must lie in [0, 1]")
        if self.attached is not None and self.find(self.attached) is None:
            raise ValueError(f"attached object {self.attached!r} not in scene")

    def find(self, object_id: str) -> SimObject | None:
        for o in self.objects:
            if o.id == object_id:
                return o
        return None

    def find_category(self, category: str) -> SimObject | None:
        for o in self.objects:
            if o.category == category:
                return o
        return None


# --- object library -----------------------------------------------------------


@dataclass(frozen=True)
class CategorySpec:
    name: str
    half_extents: tuple[float, float, float]
    part_xyz: tuple[float, float, float]  # graspable part in object frame
    part_yaw_deg: float
    color: tuple[int, int, int]
    receptacle: bool = False
    articulation_axis: tuple[float, float, float] | None = None
    articulation_range: tuple[float, float] | None = None

    def part_pose(self) -> Pose:
        q = quat_normalize(quat_mul(quat_from_yaw(math.radians(self.part_yaw_deg)), TOPDOWN_Q))
        return Pose(np.array(self.part_xyz), q)


CATEGORIES: dict[str, CategorySpec] = {
    spec.name: spec
    for spec in (
        # handle-style grasp suite: part well away from the bbox center
        CategorySpec("dustpan", (0.07, 0.09, 0.02), (0.0, 0.12, 0.02), 0.0, (200, 60, 60)),
        CategorySpec("kettle", (0.07, 0.055, 0.06), (0.085, 0.0, 0.05), 90.0, (80, 80, 200)),
        CategorySpec("pot", (0.08, 0.08, 0.045), (0.105, 0.0, 0.04), 90.0, (90, 90, 90), receptacle=True),
        CategorySpec("box", (0.05, 0.05, 0.04), (0.0, 0.0, 0.04), 0.0, (170, 120, 60), receptacle=True),
        CategorySpec("headphones", (0.075, 0.065, 0.03), (0.0, 0.065, 0.035), 0.0, (40, 160, 90)),
        # center-graspable produce
        CategorySpec("apple", (0.035, 0.035, 0.035), (0.0, 0.0, 0.035), 0.0, (220, 40, 40)),
        CategorySpec("peach", (0.032, 0.032, 0.032), (0.0, 0.0, 0.032), 0.0, (240, 160, 110)),
        CategorySpec("bell_pepper", (0.038, 0.038, 0.045), (0.0, 0.0, 0.045), 0.0, (230, 190, 40)),
        CategorySpec("eggplant", (0.055, 0.03, 0.03), (0.0, 0.0, 0.03), 90.0, (110, 50, 140)),
        # receptacles
        CategorySpec("plate", (0.085, 0.085, 0.012), (0.0, 0.08, 0.012), 0.0, (230, 230, 230), receptacle=True),
        CategorySpec("basket", (0.1, 0.08, 0.05), (0.0, 0.09, 0.05), 0.0, (150, 150, 60), receptacle=True),
        # articulated
        CategorySpec(
            "cubby",
            (0.11, 0.09, 0.09),
            (0.0, -0.1, 0.05),
            0.0,
            (120, 85, 50),
            articulation_axis=(0.0, 1.0, 0.0),
            articulation_range=(0.0, 0.1),
        ),
        CategorySpec(
            "faucet",
            (0.03, 0.03, 0.08),
            (0.05, 0.0, 0.07),
            90.0,
            (180, 180, 190),
            articulation_axis=(1.0, 0.0, 0.0),
            articulation_range=(0.0, 0.06),
        ),
    )
}

GRASP_SUITE = ("dustpan", "kettle", "pot", "box", "headphones")

DEFAULT_CAMERA = CameraModel(
    fx=100.0,
    fy=100.0,
    cx=64.0,
    cy=64.0,
    width=128,
    height=128,
    extrinsic=Pose(
        np.array([0.0, -0.85, 1.25]),
        quat_from_axis_angle(np.array([1.0, 0.0, 0.0]), math.radians(-135)),
    ),
)

EE_START = Pose(np.array([0.0, 0.0, TABLE_HEIGHT + 0.45]), TOPDOWN_Q)


def part_world_pose(obj: SimObject) -> Pose:
    """World pose of the graspable part, including any articulation travel."""
    offset = obj.part_offset
    if obj.articulation is not None:
        shifted = offset.position + obj.articulation.axis * obj.articulation.current
        offset = Pose(shifted, offset.orientation)
    return compose(obj.pose, offset)


# --- scene spawning -----------------------------------------------------------


def _perturbed_part(spec: CategorySpec, rng_instance, novel: bool) -> Pose:
    """Instance part pose: both bands are always drawn so twins stay aligned."""
    seen = rng_instance.uniform(-SEEN_PART_JITTER, SEEN_PART_JITTER, size=2)
    angle = rng_instance.uniform(0.0, 2.0 * math.pi)
    radius = rng_instance.uniform(*NOVEL_PART_SHIFT)
    shift = np.array([radius * math.cos(angle), radius * math.sin(angle)]) if novel else seen
    base = spec.part_pose()
    return Pose(base.position + np.array([shift[0], shift[1], 0.0]), base.orientation)


def _overlaps(x, y, radius, placed) -> bool:
    for px, py, pr in placed:
        if math.hypot(x - px, y - py) < radius + pr + 0.01:
            return True
    return False


def spawn_scene(
    task: TaskSpec,
    seed: int,
    variation: str = "in_dist",
    n_distractors: int | None = None,
    max_attempts: int = 1000,
) -> Scene:
    """Target (+receptacle for place) plus 2-3 distractors, rejection-sampled.

    Variations are controlled twins of the in_dist scene for the same seed:
    camera_shift touches only the camera extrinsic, background_shift only the
    background tag, novel_object only the instances' part offsets.
    """
    if variation not in VARIATIONS:
        raise ValueError(f"unknown variation {variation!r}")
    if task.target not in CATEGORIES:
        raise InfeasibleTask(f"unknown target category {task.target!r}")
    rng_layout = np.random.default_rng([seed, 0])
    rng_instance = np.random.default_rng([seed, 1])
    rng_variation = np.random.default_rng([seed, 2])

    required = [task.target]
    if task.verb == "place":
        if task.receptacle not in CATEGORIES or not CATEGORIES[task.receptacle].receptacle:
            raise InfeasibleTask(f"invalid receptacle {task.receptacle!r}")
        required.append(task.receptacle)
    others = [c for c in CATEGORIES if c not in required and c not in ("cubby", "faucet")]
    if n_distractors is None:
        n_distractors = int(rng_layout.integers(2, 4))
    picked = list(rng_layout.choice(others, size=n_distractors, replace=False))

    objects = []
    placed: list[tuple[float, float, float]] = []
    for idx, category in enumerate(required + picked):
        spec = CATEGORIES[category]
        radius = math.hypot(spec.half_extents[0], spec.half_extents[1])
        for attempt in range(max_attempts + 1):
            if attempt == max_attempts:
                raise PlacementFailure(f"could not place {category} after {max_attempts} attempts")
            x = rng_layout.uniform(*TABLE_X_RANGE)
            y = rng_layout.uniform(*TABLE_Y_RANGE)
            if not _overlaps(x, y, radius, placed):
                break
        placed.append((x, y, radius))
        yaw = rng_layout.uniform(-math.pi, math.pi) if spec.articulation_axis is None else 0.0
        texture = str(rng_layout.choice(TEXTURE_TAGS))
        pose = Pose(
            np.array([x, y, TABLE_HEIGHT + spec.half_extents[2]]), quat_from_yaw(yaw)
        )
        articulation = None
        if spec.articulation_axis is not None:
            lo, hi = spec.articulation_range
            articulation = Articulation(np.array(spec.articulation_axis), lo, hi, lo)
        objects.append(
            SimObject(
                id=f"{category}_{idx}",
                category=category,
                pose=pose,
                part_offset=_perturbed_part(spec, rng_instance, novel=variation == "novel_object"),
                half_extents=np.array(spec.half_extents),
                texture=texture,
                articulation=articulation,
            )
        )

    camera = DEFAULT_CAMERA
    background = "gray"
    cam_jitter = rng_variation.uniform(-1.0, 1.0, size=4)  # drawn for every variation
    bg_pick = int(rng_variation.integers(1, len(BACKGROUND_TAGS)))
    if variation == "camera_shift":
        dpos = np.array([0.12 * cam_jitter[0], 0.08 * cam_jitter[1], 0.08 * cam_jitter[2]])
        dyaw = math.radians(8.0) * cam_jitter[3]
        camera = CameraModel(
            fx=camera.fx,
            fy=camera.fy,
            cx=camera.cx,
            cy=camera.cy,
            width=camera.width,
            height=camera.height,
            extrinsic=Pose(
                camera.extrinsic.position + dpos,
                quat_normalize(quat_mul(quat_from_yaw(dyaw), camera.extrinsic.orientation)),
            ),
        )
    elif variation == "background_shift":
        background = BACKGROUND_TAGS[bg_pick]

    return Scene(
        objects=tuple(objects),
        ee_pose=EE_START,
        gripper=1.0,
        camera=camera,
        background=background,
    )


# --- stepping -----------------------------------------------------------------


def step(scene: Scene, action: Action, cfg: SimConfig = DEFAULT_SIM_CONFIG) -> Scene:
    """Advance one tick. Invalid motions clamp instead of erroring."""
    dp = np.asarray(action.delta_position, dtype=np.float64)
    norm = float(np.linalg.norm(dp))
    if norm > cfg.max_step_m:
        dp = dp * (cfg.max_step_m / norm)
    new_ee = Pose(
        scene.ee_pose.position + dp,
        quat_normalize(quat_mul(action.delta_orientation, scene.ee_pose.orientation)),
    )
    g_prev = scene.gripper
    delta_g = float(np.clip(action.gripper_command - g_prev, -cfg.max_gripper_rate, cfg.max_gripper_rate))
    g_new = float(np.clip(g_prev + delta_g, 0.0, 1.0))

    attached = scene.attached
    grasp_offset = scene.grasp_offset
    alpha = cfg.aperture_threshold

    objects = list(scene.objects)

    if attached is None and g_prev > alpha and g_new < alpha:
        best = None
        for i, obj in enumerate(objects):
            part = part_world_pose(obj)
            dist = float(np.linalg.norm(new_ee.position - part.position))
            angle = quat_angle(new_ee.orientation, part.orientation)
            if dist <= cfg.attach_radius and math.degrees(angle) <= cfg.attach_angle_deg:
                if best is None or dist < best[0]:
                    best = (dist, i)
        if best is not None:
            i = best[1]
            attached = objects[i].id
            if objects[i].articulation is None:
                grasp_offset = compose(invert(new_ee), objects[i].pose)
            else:
                grasp_offset = None
    elif attached is not None and g_prev < alpha and g_new > alpha:
        attached = None
        grasp_offset = None

    if attached is not None:
        for i, obj in enumerate(objects):
            if obj.id != attached:
                continue
            if obj.articulation is None:
                objects[i] = replace(obj, pose=compose(new_ee, grasp_offset))
            else:
                art = obj.articulation
                axis_world = quat_rotate(obj.pose.orientation, art.axis)
                travel = float(np.dot(new_ee.position - scene.ee_pose.position, axis_world))
                new_val = float(np.clip(art.current + travel, art.lo, art.hi))
                objects[i] = replace(obj, articulation=replace(art, current=new_val))
            break

    return replace(
        scene,
        objects=tuple(objects),
        ee_pose=new_ee,
        gripper=g_new,
        attached=attached,
        grasp_offset=grasp_offset,
        step_count=scene.step_count + 1,
    )


def check_success(scene: Scene, task: TaskSpec, cfg: SimConfig = DEFAULT_SIM_CONFIG) -> bool:
    target = scene.find_category(task.target)
    if target is None:
        return False
    if task.verb == "pick":
        return (
            scene.attached == target.id
            and target.pose.position[2] >= scene.table_height + cfg.lift_height
        )
    if task.verb == "place":
        receptacle = scene.find_category(task.receptacle)
        if receptacle is None or scene.attached == target.id:
            return False
        rel = quat_rotate(
            invert(receptacle.pose).orientation, target.pose.position - receptacle.pose.position
        )
        return (
            abs(rel[0]) <= receptacle.half_extents[0]
            and abs(rel[1]) <= receptacle.half_extents[1]
        )
    if task.verb in ("close", "turn"):
        art = target.articulation
        return art is not None and abs(art.current - art.hi) <= cfg.articulation_tol
    return False


# --- scripted expert ----------------------------------------------------------

_MOVE_TOL_POS = 0.004
_MOVE_TOL_ANG = 0.03
_SEGMENT_CAP = 400


class _Recorder:
    def __init__(self, scene: Scene, prefix: str):
        self.scene = scene
        self.prefix = prefix
        self.states: list[tuple[Pose, float]] = []
        self.actions: list[Action] = []

    def apply(self, action: Action, cfg: SimConfig):
        self.states.append((self.scene.ee_pose, self.scene.gripper))
        self.actions.append(action)
        self.scene = step(self.scene, action, cfg)

    def move_to(self, target: Pose, grip: float, cfg: SimConfig):
        for _ in range(_SEGMENT_CAP):
            err_p = target.position - self.scene.ee_pose.position
            err_ang = quat_angle(target.orientation, self.scene.ee_pose.orientation)
            grip_done = abs(self.scene.gripper - grip) < 1e-9
            if np.linalg.norm(err_p) <= _MOVE_TOL_POS and err_ang <= _MOVE_TOL_ANG and grip_done:
                return
            dq = quat_normalize(
                quat_mul(target.orientation, np.array([1.0, -1.0, -1.0, -1.0]) * self.scene.ee_pose.orientation)
            )
            self.apply(Action(err_p, dq, grip), cfg)
        raise InfeasibleTask("expert failed to converge on a segment")

    def finish(self, language: str, objects: tuple[ObjectAnnotation, ...]) -> Trajectory:
        frames = [
            Frame(f"{self.prefix}/{i:04d}", pose, g, action)
            for i, ((pose, g), action) in enumerate(zip(self.states, self.actions))
        ]
        frames.append(
            Frame(
                f"{self.prefix}/{len(self.states):04d}",
                self.scene.ee_pose,
                self.scene.gripper,
                None,
            )
        )
        return Trajectory(language=language, frames=tuple(frames), objects=objects)


def _above(p: Pose, dz: float) -> Pose:
    return Pose(p.position + np.array([0.0, 0.0, dz]), p.orientation)


def scene_annotations(scene: Scene) -> tuple[ObjectAnnotation, ...]:
    """Ground-truth object annotations (category, world pose, projected part pixel)."""
    out = []
    for obj in scene.objects:
        try:
            uv = project_point(scene.camera, part_world_pose(obj).position)
            pixel = (float(uv[0]), float(uv[1]))
        except BehindCamera:
            pixel = None
        out.append(ObjectAnnotation(category=obj.category, world_pose=obj.pose, part_pixel=pixel))
    return tuple(out)


def generate_demo(
    scene: Scene, task: TaskSpec, cfg: SimConfig = DEFAULT_SIM_CONFIG
) -> Trajectory:
    """Scripted expert rollout whose extracted plan has the canonical event kinds.

    pick: approach above the part, descend, close, lift -> [close, final]
    place: ...transport over the receptacle, open, retreat -> [close, open, final]
    close/turn: grasp the handle, push to the articulation end, open, retreat.
    """
    target = scene.find_category(task.target)
    if target is None:
        raise InfeasibleTask(f"no {task.target!r} in scene")
    if task.verb in ("close", "turn") and target.articulation is None:
        raise InfeasibleTask(f"{task.target!r} is not articulated")
    receptacle = None
    if task.verb == "place":
        receptacle = scene.find_category(task.receptacle)
        if receptacle is None:
            raise InfeasibleTask(f"no {task.receptacle!r} in scene")

    annotations = scene_annotations(scene)
    rec = _Recorder(scene, prefix=f"demo/{task.verb}_{task.target}")
    grasp = part_world_pose(target)
    approach = _above(grasp, 0.10)

    rec.move_to(approach, 1.0, cfg)
    rec.move_to(grasp, 1.0, cfg)
    rec.move_to(grasp, 0.0, cfg)  # close; attach happens at the threshold crossing
    if rec.scene.attached != target.id:
        raise InfeasibleTask("expert close did not attach the target")

    if task.verb == "pick":
        rec.move_to(_above(grasp, 0.25), 0.0, cfg)
    elif task.verb == "place":
        lift = _above(grasp, 0.25)
        rec.move_to(lift, 0.0, cfg)
        drop_z = (
            receptacle.pose.position[2]
            + receptacle.half_extents[2]
            + target.half_extents[2]
            + 0.04
        )
        drop = Pose(
            np.array([receptacle.pose.position[0], receptacle.pose.position[1], drop_z + 0.10]),
            grasp.orientation,
        )
        rec.move_to(drop, 0.0, cfg)
        rec.move_to(Pose(drop.position - np.array([0.0, 0.0, 0.10]), drop.orientation), 0.0, cfg)
        rec.move_to(rec.scene.ee_pose, 1.0, cfg)  # open / release
        rec.move_to(_above(rec.scene.ee_pose, 0.15), 1.0, cfg)
    else:  # close / turn: drag the handle to the end of its range
        art = target.articulation
        axis_world = quat_rotate(target.pose.orientation, art.axis)
        push_target = Pose(grasp.position + axis_world * (art.hi - art.current), grasp.orientation)
        rec.move_to(push_target, 0.0, cfg)
        rec.move_to(rec.scene.ee_pose, 1.0, cfg)
        rec.move_to(_above(rec.scene.ee_pose, 0.15), 1.0, cfg)

    if not check_success(rec.scene, task, cfg):
        raise InfeasibleTask("expert rollout did not satisfy the success check")
    return rec.finish(task.language, annotations)


# --- snapshot rendering ---------------------------------------------------------


def _convex_hull(points: list[tuple[int, int]]) -> list[tuple[int, int]]:
    """Monotone chain; returns CCW hull in image coordinates (y down)."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[tuple[int, int]] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[int, int]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    # lower+upper is clockwise in a y-up frame; image y grows down, so it is
    # CCW for the fill kernel's cross-product test.
    return lower[:-1] + upper[:-1]


def _fill_world_polygon(buf, cam: CameraModel, corners: np.ndarray, color) -> None:
    pixels = []
    for corner in corners:
        try:
            uv = project_point(cam, corner)
        except BehindCamera:
            return
        pixels.append(round_pixel(uv[0], uv[1]))
    hull = _convex_hull(pixels)
    if len(hull) < 3:
        return
    xs = np.array([p[0] for p in hull], dtype=np.int64)
    ys = np.array([p[1] for p in hull], dtype=np.int64)
    kernels.fill_convex_polygon(buf, xs, ys, color)


def _bbox_corners(obj: SimObject) -> np.ndarray:
    he = obj.half_extents
    signs = np.array(
        [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=np.float64
    )
    local = signs * he
    r = np.stack([quat_rotate(obj.pose.orientation, c) for c in local])
    return obj.pose.position + r


def _texture_tint(color: tuple[int, int, int], texture: str) -> tuple[int, int, int]:
    delta = {"plain": 0, "matte": -12, "gloss": 12, "striped": -24}[texture]
    return tuple(int(np.clip(c + delta, 0, 255)) for c in color)


def snapshot(scene: Scene) -> Image:
    """Deterministic flat-shaded raster: table quad, object bboxes, EE outline."""
    cam = scene.camera
    buf = np.empty((cam.height, cam.width, 3), dtype=np.uint8)
    buf[:] = np.asarray(VOID_COLOR, dtype=np.uint8)

    xmin, xmax, ymin, ymax = TABLE_DRAW_RECT
    z = scene.table_height
    table = np.array(
        [[xmin, ymin, z], [xmax, ymin, z], [xmax, ymax, z], [xmin, ymax, z]]
    )
    _fill_world_polygon(buf, cam, table, TABLE_COLORS[scene.background])

    order = sorted(
        scene.objects,
        key=lambda o: (-float(np.linalg.norm(o.pose.position - cam.extrinsic.position)), o.id),
    )
    for obj in order:
        color = _texture_tint(CATEGORIES[obj.category].color, obj.texture)
        _fill_world_polygon(buf, cam, _bbox_corners(obj), color)

    from .geometry import DEFAULT_GRIPPER_GEOMETRY, project_outline
    from .geometry import OUTLINE_SEGMENTS as segs

    try:
        outline = project_outline(cam, scene.ee_pose, DEFAULT_GRIPPER_GEOMETRY)
        pts = [round_pixel(u, v) for u, v in outline.points]
        arr = np.array(
            [[pts[a][0], pts[a][1], pts[b][0], pts[b][1]] for a, b in segs], dtype=np.int64
        )
        kernels.draw_segments(buf, arr, EE_COLOR)
    except BehindCamera:
        pass
    return Image(width=cam.width, height=cam.height, pixels=buf)
