"""Shared pose, track and skeleton types plus elementary keypoint geometry."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Keypoint:
    """A single 2D body joint detection in pixel coordinates."""

    x: float
    y: float
    confidence: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("keypoint coordinates must be finite")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")

    @property
    def xy(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)

    def distance_to(self, other: "Keypoint") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)


@dataclass(frozen=True)
class Pose:
    """Fixed-length tuple of optional keypoints for one person in one frame.

    A missing joint is stored as None. Poses with no joint at all are
    rejected at construction; downstream code may rely on at least one
    joint being present.
    """

    joints: tuple

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        if not any(j is not None for j in self.joints):
            raise ValueError("empty pose")

    def __len__(self) -> int:
        return len(self.joints)

    def present_indices(self) -> list:
        return [j for j, kp in enumerate(self.joints) if kp is not None]

    def common_joints(self, other: "Pose") -> list:
        """Indices where both poses have a detected joint."""
        return [j for j, (a, b) in enumerate(zip(self.joints, other.joints))
                if a is not None and b is not None]


@dataclass
class FramePoses:
    """All poses of one frame; ids carries ground-truth identities if known."""

    frame_index: int
    poses: list
    ids: list | None = None

    def __post_init__(self):
        if self.frame_index < 0:
            raise ValueError("frame_index must be >= 0")
        if self.ids is not None and len(self.ids) != len(self.poses):
            raise ValueError("ids and poses length mismatch")


@dataclass
class Track:
    """One identity: an ordered list of (frame_index, Pose) entries."""

    id: int
    birth_frame: int
    entries: list

    @property
    def last_frame(self) -> int:
        return self.entries[-1][0]

    @property
    def length(self) -> int:
        return len(self.entries)

    def append(self, frame_index: int, pose: Pose):
        if self.entries and frame_index <= self.last_frame:
            raise ValueError("track entries must advance in time")
        self.entries.append((frame_index, pose))


@dataclass
class TrackSet:
    """Mutable collection of tracks with a fresh-id counter."""

    tracks: list = field(default_factory=list)
    next_id: int = 0

    def new_track(self, frame_index: int, pose: Pose) -> Track:
        track = Track(id=self.next_id, birth_frame=frame_index,
                      entries=[(frame_index, pose)])
        self.next_id += 1
        self.tracks.append(track)
        self._check_ids()
        return track

    def _check_ids(self):
        ids = [t.id for t in self.tracks]
        if len(ids) != len(set(ids)):
            raise ValueError("duplicate track ids")
        if self.tracks and self.next_id <= max(ids):
            raise ValueError("next_id must exceed every used id")


@dataclass(frozen=True)
class BBox:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError("degenerate bbox with min > max")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height


@dataclass(frozen=True)
class SkeletonConfig:
    """Joint layout plus the constants the geometric similarity scores need."""

    joint_names: tuple
    head_pair: tuple
    oks_kappas: tuple

    def __post_init__(self):
        j = len(self.joint_names)
        a, b = self.head_pair
        if not (0 <= a < j and 0 <= b < j):
            raise ValueError("head_pair indices out of range")
        if len(self.oks_kappas) != j:
            raise ValueError("oks_kappas length must equal joint count")
        if any(k <= 0 for k in self.oks_kappas):
            raise ValueError("oks_kappas must be positive")

    @property
    def joint_count(self) -> int:
        return len(self.joint_names)


# PoseTrack-style 15 joint layout (MPII ordering).
POSETRACK_JOINT_NAMES = (
    "right_ankle", "right_knee", "right_hip",
    "left_hip", "left_knee", "left_ankle",
    "right_wrist", "right_elbow", "right_shoulder",
    "left_shoulder", "left_elbow", "left_wrist",
    "neck", "nose", "head_top",
)

# COCO keypoint sigmas; the OKS falloff constant kappa is 2*sigma.
_COCO_SIGMAS = {
    "nose": 0.026, "eye": 0.025, "ear": 0.035,
    "shoulder": 0.079, "elbow": 0.072, "wrist": 0.062,
    "hip": 0.107, "knee": 0.087, "ankle": 0.089,
}


def _default_kappas() -> tuple:
    all_sigmas = [0.026] + [s for name, s in _COCO_SIGMAS.items()
                            if name != "nose" for _ in (0, 1)]
    mean_kappa = 2.0 * sum(all_sigmas) / len(all_sigmas)
    kappas = []
    for name in POSETRACK_JOINT_NAMES:
        part = name.split("_", 1)[-1]
        sigma = _COCO_SIGMAS.get(part)
        # neck and head_top have no COCO counterpart
        kappas.append(2.0 * sigma if sigma is not None else mean_kappa)
    return tuple(kappas)


def default_skeleton() -> SkeletonConfig:
    """PoseTrack 15-joint skeleton with head_pair = (head_top, neck)."""
    names = POSETRACK_JOINT_NAMES
    return SkeletonConfig(
        joint_names=names,
        head_pair=(names.index("head_top"), names.index("neck")),
        oks_kappas=_default_kappas(),
    )


def pose_bbox(pose: Pose, pad_fraction: float = 0.0) -> BBox:
    """Tight axis-aligned box over the present joints of a pose.

    The box is expanded on each side by pad_fraction * max(width, height).
    """
    if pad_fraction < 0:
        raise ValueError("pad_fraction must be >= 0")
    xs = [kp.x for kp in pose.joints if kp is not None]
    ys = [kp.y for kp in pose.joints if kp is not None]
    if not xs:
        raise ValueError("empty pose")
    x_min, x_max = min(xs), max(xs)
    y_min, y_max = min(ys), max(ys)
    pad = pad_fraction * max(x_max - x_min, y_max - y_min)
    return BBox(x_min - pad, y_min - pad, x_max + pad, y_max + pad)


def joint_displacement(p_prev: Keypoint, p_curr: Keypoint):
    """Unit motion direction and Euclidean distance between two keypoints.

    Returns (v, lam) with ||v|| == 1 and lam > 0 for distinct points.
    Coincident points give v == (0, 0) and lam == 0; the caller has to use
    the stationary similarity branch in that case.
    """
    dx = p_curr.x - p_prev.x
    dy = p_curr.y - p_prev.y
    lam = math.hypot(dx, dy)
    if lam == 0.0:
        return np.zeros(2), 0.0
    return np.array([dx / lam, dy / lam]), lam
