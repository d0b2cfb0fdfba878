"""Key-timestep detection and hindsight affordance plans from trajectories.

A trajectory's plan is the ordered list of end-effector poses at the
timesteps where the gripper crosses the aperture threshold (open->close or
close->open), plus the final timestep. The crossing rule is strict on both
sides: values exactly equal to the threshold never emit an event. No
debouncing is applied; rapid oscillations produce multiple events by design
(denoising is a dataset-quality concern, not an extraction concern).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose

DEFAULT_APERTURE_THRESHOLD = 0.5

KIND_CLOSE = "close"
KIND_OPEN = "open"
KIND_FINAL = "final"
WAYPOINT_KINDS = (KIND_CLOSE, KIND_OPEN, KIND_FINAL)


class EmptySequence(Exception):
    """A gripper sequence or trajectory with zero timesteps."""


class NoActions(Exception):
    """A trajectory without a single actionable frame."""


@dataclass(frozen=True)
class Action:
    """Cartesian EE command: world-frame deltas plus a target gripper aperture."""

    delta_position: np.ndarray
    delta_orientation: np.ndarray
    gripper_command: float

    def __post_init__(self):
        dp = np.asarray(self.delta_position, dtype=np.float64).reshape(3).copy()
        dq = np.asarray(self.delta_orientation, dtype=np.float64).reshape(4).copy()
        n = float(np.sqrt(np.dot(dq, dq)))
        if abs(n - 1.0) > 1e-9:
            raise ValueError("action delta_orientation must be a unit quaternion")
        if not 0.0 <= self.gripper_command <= 1.0:
            raise ValueError("gripper_command must lie in [0, 1]")
        dp.setflags(write=False)
        dq.setflags(write=False)
        object.__setattr__(self, "delta_position", dp)
        object.__setattr__(self, "delta_orientation", dq)


@dataclass(frozen=True)
class Frame:
    image_ref: str
    ee_pose: Pose
    gripper: float
    action: Action | None = None

    def __post_init__(self):
        if not 0.0 <= self.gripper <= 1.0:
            raise ValueError("gripper aperture must lie in [0, 1]")


@dataclass(frozen=True)
class ObjectAnnotation:
    """Ground-truth or human-marked object info carried alongside a trajectory or image."""

    category: str
    world_pose: Pose
    part_pixel: tuple[float, float] | None = None


@dataclass(frozen=True)
class Trajectory:
    language: str
    frames: tuple[Frame, ...]
    objects: tuple[ObjectAnnotation, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        object.__setattr__(self, "objects", tuple(self.objects))
        if len(self.frames) < 1:
            raise EmptySequence("trajectory must have at least one frame")


@dataclass(frozen=True)
class Waypoint:
    pose: Pose
    kind: str
    source_timestep: int

    def __post_init__(self):
        if self.kind not in WAYPOINT_KINDS:
            raise ValueError(f"unknown waypoint kind {self.kind!r}")


@dataclass(frozen=True)
class AffordancePlan:
    """Ordered EE poses at key timesteps; the last waypoint is always kind=final.

    ``fallback`` and ``ambiguous`` are runtime flags set by the predictor and
    never serialized: extracted or annotated plans always carry the defaults.
    """

    waypoints: tuple[Waypoint, ...]
    fallback: bool = False
    ambiguous: bool = False

    def __post_init__(self):
        object.__setattr__(self, "waypoints", tuple(self.waypoints))
        if len(self.waypoints) == 0:
            return
        steps = [w.source_timestep for w in self.waypoints]
        if any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValueError("waypoint source_timesteps must strictly increase")
        if self.waypoints[-1].kind != KIND_FINAL:
            raise ValueError("last waypoint must have kind=final")

    def __len__(self) -> int:
        return len(self.waypoints)


@dataclass(frozen=True)
class ExtractionConfig:
    alpha: float = DEFAULT_APERTURE_THRESHOLD

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly inside (0, 1)")


def detect_key_timesteps(
    gripper: np.ndarray | list[float], cfg: ExtractionConfig = ExtractionConfig()
) -> list[tuple[int, str]]:
    """Indices where the aperture crosses the threshold, with the crossing kind.

    Index i is reported with kind=close iff g[i-1] > alpha and g[i] < alpha,
    and kind=open iff g[i-1] < alpha and g[i] > alpha. Equality with alpha on
    either side emits nothing.
    """
    g = np.asarray(gripper, dtype=np.float64)
    if g.ndim != 1 or g.size == 0:
        raise EmptySequence("gripper sequence must be non-empty and 1-D")
    a = cfg.alpha
    events: list[tuple[int, str]] = []
    for i in range(1, g.size):
        prev, cur = g[i - 1], g[i]
        if prev > a and cur < a:
            events.append((i, KIND_CLOSE))
        elif prev < a and cur > a:
            events.append((i, KIND_OPEN))
    return events


def build_affordance_plan(
    traj: Trajectory, cfg: ExtractionConfig = ExtractionConfig()
) -> AffordancePlan:
    """Hindsight plan: one waypoint per gripper crossing plus the final frame.

    A crossing at the last frame is merged into the final waypoint rather than
    duplicated, so the plan never carries two waypoints for one timestep.
    """
    g = [f.gripper for f in traj.frames]
    events = detect_key_timesteps(g, cfg)
    last = len(traj.frames) - 1
    waypoints = [
        Waypoint(pose=traj.frames[i].ee_pose, kind=kind, source_timestep=i)
        for i, kind in events
        if i != last
    ]
    waypoints.append(Waypoint(pose=traj.frames[last].ee_pose, kind=KIND_FINAL, source_timestep=last))
    return AffordancePlan(waypoints=tuple(waypoints))


def make_predictor_record(
    traj: Trajectory, cfg: ExtractionConfig = ExtractionConfig()
) -> tuple[str, str, AffordancePlan]:
    """(initial image ref, language, full-trajectory plan) training tuple."""
    plan = build_affordance_plan(traj, cfg)
    return traj.frames[0].image_ref, traj.language, plan


def make_policy_records(
    traj: Trajectory, cfg: ExtractionConfig = ExtractionConfig()
) -> list[tuple[int, str, AffordancePlan, Action]]:
    """Per-frame behavioral-cloning records, all conditioned on the same hindsight plan."""
    plan = build_affordance_plan(traj, cfg)
    records = [
        (i, traj.language, plan, f.action)
        for i, f in enumerate(traj.frames)
        if f.action is not None
    ]
    if not records:
        raise NoActions("trajectory has no frame with an action")
    return records
