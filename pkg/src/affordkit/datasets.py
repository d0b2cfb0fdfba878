"""Dataset file formats and the three-source training mixture.

Directory layout (one dataset per directory, single-writer via a lock file):

    trajectories.jsonl   one trajectory per line (schema below)
    annotations.jsonl    one augmented image per line
    web_proxy.jsonl      synthetic caption/detection records
    images/              8-bit RGB PNGs referenced by relative path
    cameras.cfg          camera + gripper geometry (INI text, see below)

All floats round-trip exactly: json writes the shortest decimal repr, which
re-reads to the identical IEEE double.

cameras.cfg accepts orientation either as a quaternion (``orientation = w x
y z``) or as degrees (``rpy_deg = roll pitch yaw``, applied as
Rz(yaw)Ry(pitch)Rx(roll)); it is always written back as a quaternion.
"""

from __future__ import annotations

import configparser
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from filelock import FileLock

from .extraction import (
    Action,
    AffordancePlan,
    Frame,
    ObjectAnnotation,
    Trajectory,
    Waypoint,
    make_predictor_record,
)
from .geometry import CameraModel, GripperGeometry, Pose, quat_from_rpy, quat_normalize

LOCK_FILENAME = ".affordkit.lock"
LOCK_TIMEOUT = -1.0  # seconds; -1 blocks until the directory writer lock frees

SOURCE_ROBOT = "robot"
SOURCE_WEB = "web"
SOURCE_AUG = "aug"
SOURCES = (SOURCE_ROBOT, SOURCE_WEB, SOURCE_AUG)

WEB_RECORD_KINDS = ("caption", "detection")


class SchemaError(Exception):
    """A dataset file violates its schema; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class AllSourcesEmpty(Exception):
    """No included mixture source has any record."""


@dataclass(frozen=True)
class AugmentedImage:
    """A cheap-to-collect task-labeled image, optionally annotated with a plan."""

    image_ref: str
    language: str
    plan: AffordancePlan | None = None
    objects: tuple[ObjectAnnotation, ...] = ()
    annotator: str = ""
    timestamp: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))


@dataclass(frozen=True)
class WebProxyRecord:
    """Synthetic stand-in for web co-training data; exercises mixture plumbing only."""

    image_ref: str
    kind: str
    payload: str

    def __post_init__(self):
        if self.kind not in WEB_RECORD_KINDS:
            raise ValueError(f"unknown web record kind {self.kind!r}")
        if not self.payload:
            raise ValueError("web record payload must be non-empty")


@dataclass(frozen=True)
class MixtureConfig:
    include_robot: bool = True
    include_web: bool = True
    include_aug: bool = True
    weight_robot: float = 1.0
    weight_web: float = 1.0
    weight_aug: float = 1.0

    def __post_init__(self):
        if not (self.include_robot or self.include_web or self.include_aug):
            raise ValueError("at least one source must be included")
        included = self.included_weights()
        if any(w < 0 for w in included.values()):
            raise ValueError("sampling weights must be non-negative")
        if sum(included.values()) == 0:
            raise ValueError("included sources must have at least one positive weight")

    def included_weights(self) -> dict[str, float]:
        out = {}
        if self.include_robot:
            out[SOURCE_ROBOT] = self.weight_robot
        if self.include_web:
            out[SOURCE_WEB] = self.weight_web
        if self.include_aug:
            out[SOURCE_AUG] = self.weight_aug
        return out


@dataclass(frozen=True)
class TrainingRecord:
    """One mixture sample. ``plan``/``objects`` are empty for web records."""

    source: str
    image_ref: str
    language: str
    plan: AffordancePlan | None = None
    objects: tuple[ObjectAnnotation, ...] = ()
    payload: str = ""

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown source tag {self.source!r}")
        object.__setattr__(self, "objects", tuple(self.objects))


@dataclass(frozen=True)
class TrainingSet:
    records: tuple[TrainingRecord, ...]
    counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        tally = {s: 0 for s in SOURCES}
        for r in self.records:
            tally[r.source] += 1
        if not self.counts:
            object.__setattr__(self, "counts", tally)
        elif {k: v for k, v in self.counts.items() if v} != {k: v for k, v in tally.items() if v}:
            raise ValueError(f"counts {self.counts} disagree with record tags {tally}")


# --- JSON encoding -----------------------------------------------------------


def pose_to_json(p: Pose) -> dict:
    return {"position": list(p.position), "orientation": list(p.orientation)}


def pose_from_json(d: dict) -> Pose:
    return Pose(np.array(d["position"], dtype=np.float64), np.array(d["orientation"], dtype=np.float64))


def plan_to_json(plan: AffordancePlan) -> dict:
    return {
        "waypoints": [
            {"pose": pose_to_json(w.pose), "kind": w.kind, "source_timestep": w.source_timestep}
            for w in plan.waypoints
        ]
    }


def plan_from_json(d: dict) -> AffordancePlan:
    return AffordancePlan(
        waypoints=tuple(
            Waypoint(pose_from_json(w["pose"]), w["kind"], int(w["source_timestep"]))
            for w in d["waypoints"]
        )
    )


def object_annotation_to_json(o: ObjectAnnotation) -> dict:
    d = {"category": o.category, "world_pose": pose_to_json(o.world_pose)}
    if o.part_pixel is not None:
        d["part_pixel"] = list(o.part_pixel)
    return d


def object_annotation_from_json(d: dict) -> ObjectAnnotation:
    px = d.get("part_pixel")
    return ObjectAnnotation(
        category=d["category"],
        world_pose=pose_from_json(d["world_pose"]),
        part_pixel=tuple(px) if px is not None else None,
    )


def _action_to_json(a: Action) -> dict:
    return {
        "delta_position": list(a.delta_position),
        "delta_orientation": list(a.delta_orientation),
        "gripper_command": a.gripper_command,
    }


def _action_from_json(d: dict) -> Action:
    return Action(
        np.array(d["delta_position"], dtype=np.float64),
        np.array(d["delta_orientation"], dtype=np.float64),
        float(d["gripper_command"]),
    )


def trajectory_to_json(traj: Trajectory) -> dict:
    return {
        "language": traj.language,
        "frames": [
            {
                "image_ref": f.image_ref,
                "ee_pose": pose_to_json(f.ee_pose),
                "gripper": f.gripper,
                "action": _action_to_json(f.action) if f.action is not None else None,
            }
            for f in traj.frames
        ],
        "objects": [object_annotation_to_json(o) for o in traj.objects],
    }


def trajectory_from_json(d: dict) -> Trajectory:
    frames = tuple(
        Frame(
            image_ref=f["image_ref"],
            ee_pose=pose_from_json(f["ee_pose"]),
            gripper=float(f["gripper"]),
            action=_action_from_json(f["action"]) if f.get("action") is not None else None,
        )
        for f in d["frames"]
    )
    objects = tuple(object_annotation_from_json(o) for o in d.get("objects", []))
    return Trajectory(language=d["language"], frames=frames, objects=objects)


def augmented_image_to_json(img: AugmentedImage) -> dict:
    return {
        "image_ref": img.image_ref,
        "language": img.language,
        "plan": plan_to_json(img.plan) if img.plan is not None else None,
        "objects": [object_annotation_to_json(o) for o in img.objects],
        "annotator": img.annotator,
        "timestamp": img.timestamp,
    }


def augmented_image_from_json(d: dict) -> AugmentedImage:
    return AugmentedImage(
        image_ref=d["image_ref"],
        language=d["language"],
        plan=plan_from_json(d["plan"]) if d.get("plan") is not None else None,
        objects=tuple(object_annotation_from_json(o) for o in d.get("objects", [])),
        annotator=d.get("annotator", ""),
        timestamp=float(d.get("timestamp", 0.0)),
    )


# --- line-delimited files ----------------------------------------------------


def _load_jsonl(path, decode):
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(decode(json.loads(line)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise SchemaError(str(e), lineno) from e
    return out


def _save_jsonl(path, items, encode):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with FileLock(path.parent / LOCK_FILENAME, timeout=LOCK_TIMEOUT):
        with open(path, "w", encoding="utf-8") as fh:
            for item in items:
                fh.write(json.dumps(encode(item)) + "\n")


def load_trajectories(path) -> list[Trajectory]:
    return _load_jsonl(path, trajectory_from_json)


def save_trajectories(trajectories, path) -> None:
    _save_jsonl(path, trajectories, trajectory_to_json)


def import_annotations(path) -> list[AugmentedImage]:
    return _load_jsonl(path, augmented_image_from_json)


def export_annotations(images, path) -> None:
    _save_jsonl(path, images, augmented_image_to_json)


def load_web_proxy(path) -> list[WebProxyRecord]:
    return _load_jsonl(path, lambda d: WebProxyRecord(d["image_ref"], d["kind"], d["payload"]))


def save_web_proxy(records, path) -> None:
    _save_jsonl(
        path,
        records,
        lambda r: {"image_ref": r.image_ref, "kind": r.kind, "payload": r.payload},
    )


def make_web_proxy_samples(n: int, seed: int = 0) -> list[WebProxyRecord]:
    """Deterministic synthetic caption/detection stubs for mixture plumbing."""
    rng = np.random.default_rng(seed)
    nouns = ("kettle", "dustpan", "pot", "box", "headphones", "apple", "basket", "cup")
    out = []
    for i in range(n):
        noun = nouns[int(rng.integers(len(nouns)))]
        if rng.random() < 0.5:
            out.append(WebProxyRecord(f"web_{i:06d}", "caption", f"a photo of a {noun} on a table"))
        else:
            x0, y0 = rng.integers(0, 100, size=2)
            out.append(
                WebProxyRecord(
                    f"web_{i:06d}",
                    "detection",
                    f"{noun} bbox ({x0},{y0},{x0 + 20},{y0 + 16})",
                )
            )
    return out


# --- training mixture --------------------------------------------------------


def assemble_mixture(
    robot: list[Trajectory],
    web: list[WebProxyRecord],
    aug: list[AugmentedImage],
    cfg: MixtureConfig,
    seed: int,
) -> TrainingSet:
    """Seeded with-replacement sampling proportional to per-source weights.

    Excluded sources contribute zero records (audited by the source tags on
    every record). Aug images without an annotated plan are not sampleable.
    The draw count equals the total size of the included pools, so default
    1:1:1 weights reproduce the input scale.
    """
    robot_pool = [
        TrainingRecord(
            source=SOURCE_ROBOT,
            image_ref=image_ref,
            language=language,
            plan=plan,
            objects=traj.objects,
        )
        for traj, (image_ref, language, plan) in ((t, make_predictor_record(t)) for t in robot)
    ]
    web_pool = [
        TrainingRecord(source=SOURCE_WEB, image_ref=r.image_ref, language="", payload=r.payload)
        for r in web
    ]
    aug_pool = [
        TrainingRecord(
            source=SOURCE_AUG,
            image_ref=a.image_ref,
            language=a.language,
            plan=a.plan,
            objects=a.objects,
        )
        for a in aug
        if a.plan is not None
    ]
    pools = {SOURCE_ROBOT: robot_pool, SOURCE_WEB: web_pool, SOURCE_AUG: aug_pool}

    weights = {
        s: w for s, w in cfg.included_weights().items() if w > 0 and len(pools[s]) > 0
    }
    if not weights:
        raise AllSourcesEmpty("no included source has records")

    names = sorted(weights)
    p = np.array([weights[s] for s in names], dtype=np.float64)
    p /= p.sum()
    total = sum(len(pools[s]) for s in names)
    rng = np.random.default_rng(seed)
    source_draws = rng.choice(len(names), size=total, p=p)
    records = []
    for k in source_draws:
        pool = pools[names[int(k)]]
        records.append(pool[int(rng.integers(len(pool)))])
    return TrainingSet(records=tuple(records))


# --- camera / gripper config file --------------------------------------------


def _parse_floats(text: str, n: int) -> np.ndarray:
    parts = text.replace(",", " ").split()
    if len(parts) != n:
        raise ValueError(f"expected {n} numbers, got {text!r}")
    return np.array([float(x) for x in parts], dtype=np.float64)


def load_camera_config(path) -> tuple[CameraModel, GripperGeometry]:
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise FileNotFoundError(path)
    cam_sec = cp["camera"]
    position = _parse_floats(cam_sec["position"], 3)
    if "orientation" in cam_sec:
        q = quat_normalize(_parse_floats(cam_sec["orientation"], 4))
    elif "rpy_deg" in cam_sec:
        r, pch, y = (math.radians(v) for v in _parse_floats(cam_sec["rpy_deg"], 3))
        q = quat_from_rpy(r, pch, y)
    else:
        raise ValueError("camera section needs 'orientation' or 'rpy_deg'")
    cam = CameraModel(
        fx=cam_sec.getfloat("fx"),
        fy=cam_sec.getfloat("fy"),
        cx=cam_sec.getfloat("cx"),
        cy=cam_sec.getfloat("cy"),
        width=cam_sec.getint("width"),
        height=cam_sec.getint("height"),
        extrinsic=Pose(position, q),
    )
    if cp.has_section("gripper"):
        g = cp["gripper"]
        geom = GripperGeometry(
            left_tip=_parse_floats(g["left_tip"], 3),
            right_tip=_parse_floats(g["right_tip"], 3),
            top=_parse_floats(g["top"], 3),
            arm=_parse_floats(g["arm"], 3),
        )
    else:
        from .geometry import DEFAULT_GRIPPER_GEOMETRY as geom
    return cam, geom


def save_camera_config(path, cam: CameraModel, geom: GripperGeometry) -> None:
    def fmt(vals) -> str:
        return " ".join(repr(float(v)) for v in vals)

    cp = configparser.ConfigParser()
    cp["camera"] = {
        "fx": repr(cam.fx),
        "fy": repr(cam.fy),
        "cx": repr(cam.cx),
        "cy": repr(cam.cy),
        "width": str(cam.width),
        "height": str(cam.height),
        "position": fmt(cam.extrinsic.position),
        "orientation": fmt(cam.extrinsic.orientation),
    }
    cp["gripper"] = {
        "left_tip": fmt(geom.left_tip),
        "right_tip": fmt(geom.right_tip),
        "top": fmt(geom.top),
        "arm": fmt(geom.arm),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with FileLock(path.parent / LOCK_FILENAME):
        with open(path, "w", encoding="utf-8") as fh:
            cp.write(fh)
