"""Synthetic sequences, detection corruption and oracle field generation.

Persons are scaled skeleton templates moved along configurable
trajectories. The oracles render flow fields and optical flow straight
from ground-truth motion, standing in for a learned predictor, with
optional corruption (angular noise, ribbon dropout) to degrade them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import kernels
from .core import (FramePoses, Keypoint, Pose, SkeletonConfig,
                   default_skeleton, joint_displacement)
from .flowfield import FlowFieldStack, GridField, IgnoreMask
from .similarity import FlowGrid

MOTION_MODELS = ("linear", "sinusoidal", "crossing", "random_walk")

# body-joint template in person-local units, (x, y), y grows downward;
# indices follow core.POSETRACK_JOINT_NAMES
_TEMPLATE = np.array([
    (-0.16, 0.78),   # right_ankle
    (-0.14, 0.38),   # right_knee
    (-0.12, 0.00),   # right_hip
    (0.12, 0.00),    # left_hip
    (0.14, 0.38),    # left_knee
    (0.16, 0.78),    # left_ankle
    (-0.36, -0.12),  # right_wrist
    (-0.30, -0.38),  # right_elbow
    (-0.20, -0.62),  # right_shoulder
    (0.20, -0.62),   # left_shoulder
    (0.30, -0.38),   # left_elbow
    (0.36, -0.12),   # left_wrist
    (0.00, -0.70),   # neck
    (0.00, -0.80),   # nose
    (0.00, -0.95),   # head_top
])

_EXTENT_X = 0.36
_EXTENT_TOP = 0.95
_EXTENT_BOT = 0.78


@dataclass(frozen=True)
class OcclusionWindow:
    """Joints of one person hidden over [frame_start, frame_end).

    joints=None hides the whole person for those frames.
    """

    person: int
    frame_start: int
    frame_end: int
    joints: tuple | None = None


@dataclass(frozen=True)
class ScenarioConfig:
    persons: int = 2
    frames: int = 30
    width: int = 256
    height: int = 256
    motion: str = "linear"
    speed_range: tuple = (1.0, 4.0)
    scale_range: tuple = (30.0, 60.0)
    occlusions: tuple = ()
    ignore_rects: tuple = ()
    seed: int = 0

    def __post_init__(self):
        if self.persons < 1 or self.frames < 1:
            raise ValueError("persons and frames must be at least 1")
        if self.motion not in MOTION_MODELS:
            raise ValueError(f"unknown motion model {self.motion!r}")
        lo, hi = self.speed_range
        if lo < 0 or hi < lo:
            raise ValueError("speed_range must be 0 <= low <= high")
        slo, shi = self.scale_range
        if slo <= 0 or shi < slo:
            raise ValueError("scale_range must be 0 < low <= high")
        joint_count = default_skeleton().joint_count
        if (self.persons * joint_count > self.width * self.height
                or 2 * _EXTENT_X * shi >= self.width
                or (_EXTENT_TOP + _EXTENT_BOT) * shi >= self.height):
            raise ValueError("scenario exceeds image capacity")


@dataclass(frozen=True)
class NoiseConfig:
    jitter_sigma: float = 0.0
    drop_prob: float = 0.0
    spurious_rate: float = 0.0
    field_angle_sigma: float = 0.0
    field_dropout: float = 0.0

    def __post_init__(self):
        if self.jitter_sigma < 0 or self.field_angle_sigma < 0:
            raise ValueError("noise sigmas must be nonnegative")
        if not 0 <= self.drop_prob <= 1 or not 0 <= self.field_dropout <= 1:
            raise ValueError("probabilities must lie in [0, 1]")
        if self.spurious_rate < 0:
            raise ValueError("spurious_rate must be nonnegative")


@dataclass
class SequenceAnnotation:
    """Ground-truth sequence: identified poses plus optional ignore masks."""

    frames: list
    skeleton: SkeletonConfig
    width: int
    height: int
    ignore_masks: list | None = None

    def __post_init__(self):
        last = None
        for frame in self.frames:
            if last is not None and frame.frame_index <= last:
                raise ValueError("frame indices must be strictly increasing")
            last = frame.frame_index
            if frame.ids is not None and len(set(frame.ids)) != len(frame.ids):
                raise ValueError("duplicate identity within a frame")
        if (self.ignore_masks is not None
                and len(self.ignore_masks) != len(self.frames)):
            raise ValueError("one ignore mask per frame required")


@dataclass
class BeliefMap:
    """Per joint class confidence grids in [0, 1]."""

    data: np.ndarray  # (J, height, width)

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float64)
        if self.data.ndim != 3:
            raise ValueError("belief map data must have shape (J, height, width)")
        if self.data.min() < 0 or self.data.max() > 1:
            raise ValueError("belief values must lie in [0, 1]")

    @property
    def joint_count(self) -> int:
        return self.data.shape[0]


def _person_margins(scale: float) -> tuple:
    mx = _EXTENT_X * scale + 1.0
    mtop = _EXTENT_TOP * scale + 1.0
    mbot = _EXTENT_BOT * scale + 1.0
    return mx, mtop, mbot


def _reflect(value: float, lo: float, hi: float) -> tuple:
    """Bounce value into [lo, hi]; returns (reflected, flipped_sign)."""
    sign = 1.0
    span = hi - lo
    if span <= 0:
        return lo, 1.0
    while value < lo or value > hi:
        if value < lo:
            value = 2 * lo - value
            sign = -sign
        else:
            value = 2 * hi - value
            sign = -sign
    return value, sign


def _linear_centers(rng, config, scale, frames):
    mx, mtop, mbot = _person_margins(scale)
    lo_x, hi_x = mx, config.width - 1 - mx
    lo_y, hi_y = mtop, config.height - 1 - mbot
    x = rng.uniform(lo_x, hi_x)
    y = rng.uniform(lo_y, hi_y)
    angle = rng.uniform(0.0, 2.0 * math.pi)
    speed = rng.uniform(*config.speed_range)
    vx = speed * math.cos(angle)
    vy = speed * math.sin(angle)
    centers = np.empty((frames, 2))
    for t in range(frames):
        centers[t] = (x, y)
        x, sx = _reflect(x + vx, lo_x, hi_x)
        y, sy = _reflect(y + vy, lo_y, hi_y)
        vx *= sx
        vy *= sy
    return centers


def _sinusoidal_centers(rng, config, scale, frames):
    base = _linear_centers(rng, config, scale, frames)
    amp = rng.uniform(0.03, 0.08) * min(config.width, config.height)
    period = rng.uniform(10.0, 30.0)
    phase = rng.uniform(0.0, 2.0 * math.pi)
    mx, mtop, mbot = _person_margins(scale)
    out = np.empty_like(base)
    for t in range(frames):
        offset = amp * math.sin(2.0 * math.pi * t / period + phase)
        x, _ = _reflect(base[t, 0], mx, config.width - 1 - mx)
        y, _ = _reflect(base[t, 1] + offset, mtop, config.height - 1 - mbot)
        out[t] = (x, y)
    return out


def _random_walk_centers(rng, config, scale, frames):
    mx, mtop, mbot = _person_margins(scale)
    lo_x, hi_x = mx, config.width - 1 - mx
    lo_y, hi_y = mtop, config.height - 1 - mbot
    x = rng.uniform(lo_x, hi_x)
    y = rng.uniform(lo_y, hi_y)
    speed_lo, speed_hi = config.speed_range
    speed = rng.uniform(speed_lo, speed_hi)
    angle = rng.uniform(0.0, 2.0 * math.pi)
    vx = speed * math.cos(angle)
    vy = speed * math.sin(angle)
    centers = np.empty((frames, 2))
    for t in range(frames):
        centers[t] = (x, y)
        vx += rng.normal(0.0, 0.5)
        vy += rng.normal(0.0, 0.5)
        norm = math.hypot(vx, vy)
        if norm > speed_hi and norm > 0:
            vx *= speed_hi / norm
            vy *= speed_hi / norm
        x, sx = _reflect(x + vx, lo_x, hi_x)
        y, sy = _reflect(y + vy, lo_y, hi_y)
        vx *= sx
        vy *= sy
    return centers


def _crossing_centers(rng, config, scales, frames):
    """X-shaped straight paths for consecutive person pairs.

    Pair members swap sides so their paths intersect near the middle of
    the sequence while keeping a vertical offset at every instant, so two
    persons never coincide in the same frame.
    """
    centers = []
    n = len(scales)
    for p in range(0, n - 1, 2):
        sa, sb = scales[p], scales[p + 1]
        mxa, mtop_a, mbot_a = _person_margins(sa)
        mxb, mtop_b, mbot_b = _person_margins(sb)
        mtop = max(mtop_a, mtop_b)
        mbot = max(mbot_a, mbot_b)
        offset = rng.uniform(8.0, 16.0)
        dy = rng.uniform(0.08, 0.16) * config.height
        y_lo = mtop + dy
        y_hi = config.height - 1 - mbot - dy - offset
        if y_hi <= y_lo:
            raise ValueError("scenario exceeds image capacity for crossings")
        yc = rng.uniform(y_lo, y_hi)
        xl = max(mxa, mxb)
        xr = config.width - 1 - xl
        t = np.linspace(0.0, 1.0, frames)[:, None]
        a = (1 - t) * np.array([[xl, yc - dy]]) + t * np.array([[xr, yc + dy]])
        b = (1 - t) * np.array([[xr, yc - dy + offset]]) \
            + t * np.array([[xl, yc + dy + offset]])
        centers.append(a)
        centers.append(b)
    if n % 2 == 1:
        centers.append(_linear_centers(rng, config, scales[-1], frames))
    return centers


def generate_sequence(config: ScenarioConfig) -> SequenceAnnotation:
    """Deterministic ground-truth sequence for a scenario configuration."""
    rng = np.random.default_rng(config.seed)
    skeleton = default_skeleton()
    joint_count = skeleton.joint_count
    scales = [rng.uniform(*config.scale_range) for _ in range(config.persons)]
    if config.motion == "crossing":
        centers = _crossing_centers(rng, config, scales, config.frames)
    else:
        maker = {"linear": _linear_centers,
                 "sinusoidal": _sinusoidal_centers,
                 "random_walk": _random_walk_centers}[config.motion]
        centers = [maker(rng, config, s, config.frames) for s in scales]
    hidden = {}
    for window in config.occlusions:
        js = (tuple(range(joint_count)) if window.joints is None
              else tuple(window.joints))
        for t in range(window.frame_start, window.frame_end):
            for j in js:
                hidden.setdefault((window.person, t), set()).add(j)
    frames = []
    for t in range(config.frames):
        poses = []
        ids = []
        for p in range(config.persons):
            gone = hidden.get((p, t), ())
            joints = []
            for j in range(joint_count):
                if j in gone:
                    joints.append(None)
                    continue
                x = centers[p][t, 0] + _TEMPLATE[j, 0] * scales[p]
                y = centers[p][t, 1] + _TEMPLATE[j, 1] * scales[p]
                joints.append(Keypoint(x, y, 1.0))
            if any(kp is not None for kp in joints):
                poses.append(Pose(joints=tuple(joints)))
                ids.append(p)
        frames.append(FramePoses(frame_index=t, poses=poses, ids=ids))
    masks = None
    if config.ignore_rects:
        masks = [IgnoreMask.from_rects(config.width, config.height,
                                       config.ignore_rects)
                 for _ in range(config.frames)]
    return SequenceAnnotation(frames=frames, skeleton=skeleton,
                              width=config.width, height=config.height,
                              ignore_masks=masks)


def corrupt_detections(gt: SequenceAnnotation, noise: NoiseConfig,
                       seed: int = 0) -> list:
    """Detections derived from GT by jitter, joint drops and spurious poses.

    True-derived joints keep confidence 1; spurious poses get confidences
    drawn from [0.1, 0.6]. Frame indices are preserved.
    """
    rng = np.random.default_rng([seed, 901])
    joint_count = gt.skeleton.joint_count
    out = []
    for frame in gt.frames:
        poses = []
        for pose in frame.poses:
            joints = []
            for kp in pose.joints:
                if kp is None:
                    joints.append(None)
                    continue
                if noise.drop_prob > 0 and rng.random() < noise.drop_prob:
                    joints.append(None)
                    continue
                x, y = kp.x, kp.y
                if noise.jitter_sigma > 0:
                    x += rng.normal(0.0, noise.jitter_sigma)
                    y += rng.normal(0.0, noise.jitter_sigma)
                joints.append(Keypoint(x, y, 1.0))
            if any(j is not None for j in joints):
                poses.append(Pose(joints=tuple(joints)))
        n_spurious = rng.poisson(noise.spurious_rate) if noise.spurious_rate else 0
        for _ in range(n_spurious):
            scale = rng.uniform(20.0, 60.0)
            cx = rng.uniform(0.0, gt.width - 1.0)
            cy = rng.uniform(0.0, gt.height - 1.0)
            conf = rng.uniform(0.1, 0.6)
            joints = []
            for j in range(joint_count):
                x = cx + _TEMPLATE[j, 0] * scale + rng.normal(0.0, 1.0)
                y = cy + _TEMPLATE[j, 1] * scale + rng.normal(0.0, 1.0)
                joints.append(Keypoint(x, y, conf))
            poses.append(Pose(joints=tuple(joints)))
        out.append(FramePoses(frame_index=frame.frame_index, poses=poses))
    return out


def _shared_identities(gt_prev: FramePoses, gt_curr: FramePoses):
    if gt_prev.ids is None or gt_curr.ids is None:
        raise ValueError("oracle generation requires identified frames")
    prev_by_id = dict(zip(gt_prev.ids, gt_prev.poses))
    curr_by_id = dict(zip(gt_curr.ids, gt_curr.poses))
    return [(pid, prev_by_id[pid], curr_by_id[pid])
            for pid in sorted(set(prev_by_id) & set(curr_by_id))]


def oracle_tff(gt_prev: FramePoses, gt_curr: FramePoses, sigma: float,
               noise: NoiseConfig, dims: tuple, joint_count: int = 15,
               seed: int = 0, scale: float = 1.0) -> FlowFieldStack:
    """Ground-truth flow fields for one frame pair, optionally corrupted.

    Corruption rotates each person-joint ribbon's vector by Gaussian
    angular noise and drops whole ribbons with the dropout probability.
    The corruption stream is seeded per frame pair, so fields do not
    depend on generation order.
    """
    width, height = dims
    gw = math.ceil(width / scale)
    gh = math.ceil(height / scale)
    sums = np.zeros((joint_count, gh, gw, 2))
    counts = np.zeros((joint_count, gh, gw), dtype=np.int32)
    noisy = noise.field_angle_sigma > 0 or noise.field_dropout > 0
    rng = np.random.default_rng([seed, gt_curr.frame_index, 733]) if noisy else None
    for _, prev_pose, curr_pose in _shared_identities(gt_prev, gt_curr):
        for j in prev_pose.common_joints(curr_pose):
            a = prev_pose.joints[j]
            b = curr_pose.joints[j]
            v, lam = joint_displacement(a, b)
            if lam == 0.0:
                continue
            wx, wy = float(v[0]), float(v[1])
            if noisy:
                if noise.field_dropout > 0 and rng.random() < noise.field_dropout:
                    continue
                if noise.field_angle_sigma > 0:
                    theta = rng.normal(0.0, noise.field_angle_sigma)
                    cos_t, sin_t = math.cos(theta), math.sin(theta)
                    wx, wy = (wx * cos_t - wy * sin_t,
                              wx * sin_t + wy * cos_t)
            kernels.ribbon_accumulate(sums[j], counts[j],
                                      a.x / scale, a.y / scale,
                                      float(v[0]), float(v[1]),
                                      lam / scale, sigma / scale, wx, wy)
    fields = []
    for j in range(joint_count):
        data = sums[j] / np.maximum(counts[j], 1)[:, :, None]
        fields.append(GridField(data))
    return FlowFieldStack(fields=fields, scale=scale)


def oracle_optical_flow(gt_prev: FramePoses, gt_curr: FramePoses,
                        smoothing_radius: float, dims: tuple) -> FlowGrid:
    """Dense displacement grid splatted around each moving joint.

    Displacements fill a disc of the smoothing radius at the previous
    joint location, overlaps are averaged, and the result is feathered by
    a normalized Gaussian blur; pixels far from any joint stay zero.
    """
    width, height = dims
    sums = np.zeros((height, width, 2))
    counts = np.zeros((height, width), dtype=np.int32)
    for _, prev_pose, curr_pose in _shared_identities(gt_prev, gt_curr):
        for j in prev_pose.common_joints(curr_pose):
            a = prev_pose.joints[j]
            b = curr_pose.joints[j]
            dx, dy = b.x - a.x, b.y - a.y
            if dx == 0.0 and dy == 0.0:
                continue
            kernels.disc_accumulate(sums, counts, a.x, a.y,
                                    smoothing_radius, dx, dy)
    covered = counts > 0
    if not covered.any():
        return FlowGrid(sums)
    avg = sums / np.maximum(counts, 1)[:, :, None]
    weight = covered.astype(np.float64)
    blur_sigma = max(smoothing_radius / 2.0, 0.5)
    num = np.stack([ndimage.gaussian_filter(avg[:, :, c] * weight, blur_sigma)
                    for c in range(2)], axis=2)
    den = ndimage.gaussian_filter(weight, blur_sigma)
    flow = np.zeros_like(sums)
    solid = den > 1e-6
    flow[solid] = num[solid] / den[solid, None]
    return FlowGrid(flow)


def render_beliefmaps(poses: FramePoses, peak_sigma: float, dims: tuple,
                      joint_count: int = 15) -> BeliefMap:
    """Max-composited Gaussian peaks, amplitude equal to joint confidence."""
    if not peak_sigma > 0:
        raise ValueError("peak_sigma must be positive")
    width, height = dims
    data = np.zeros((joint_count, height, width))
    for pose in poses.poses:
        for j, kp in enumerate(pose.joints):
            if kp is not None:
                kernels.gaussian_peak_max(data[j], kp.x, kp.y, peak_sigma,
                                          kp.confidence)
    return BeliefMap(data)


def _nms_single(grid: np.ndarray, tau_nms: float) -> list:
    padded = np.full((grid.shape[0] + 2, grid.shape[1] + 2), -np.inf)
    padded[1:-1, 1:-1] = grid
    neighbor_max = np.full_like(grid, -np.inf)
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            shifted = padded[1 + dy:padded.shape[0] - 1 + dy,
                             1 + dx:padded.shape[1] - 1 + dx]
            neighbor_max = np.maximum(neighbor_max, shifted)
    cand = (grid >= tau_nms) & (grid >= neighbor_max)
    if not cand.any():
        return []
    labels, n = ndimage.label(cand, structure=np.ones((3, 3), dtype=int))
    peaks = []
    for k in range(1, n + 1):
        comp = labels == k
        ring = ndimage.binary_dilation(comp, np.ones((3, 3), dtype=bool)) & ~comp
        value = float(grid[comp][0])
        # a plateau spanning the whole grid has no outside pixel to beat
        if not ring.any():
            continue
        if np.any(grid[ring] >= value):
            continue
        ys, xs = np.nonzero(comp)
        order = np.lexsort((ys, xs))[0]
        peaks.append(Keypoint(float(xs[order]), float(ys[order]),
                              min(value, 1.0)))
    peaks.sort(key=lambda kp: (kp.x, kp.y))
    return peaks


def nms_detect(belief: BeliefMap, tau_nms: float) -> list:
    """Strict local maxima at or above tau_nms, one keypoint list per joint.

    Plateaus count as one maximum, located at their lexicographically
    smallest (x, y) pixel, and only when every surrounding pixel is
    strictly lower; a constant map therefore yields nothing.
    """
    if not 0.0 <= tau_nms <= 1.0:
        raise ValueError("tau_nms must lie in [0, 1]")
    return [_nms_single(belief.data[j], tau_nms)
            for j in range(belief.joint_count)]


def group_nms_detections(gt_frame: FramePoses, detections: list,
                         max_dist: float) -> FramePoses:
    """Assemble per-joint NMS keypoints into poses via nearest GT joints.

    Oracle grouping: each detected keypoint claims the closest GT pose
    whose joint of that class lies within max_dist; a pose slot takes at
    most one keypoint per joint. Keypoints with no claim are dropped.
    """
    slots = [[None] * len(gt_frame.poses[0]) if gt_frame.poses else []
             for _ in gt_frame.poses]
    for j, kps in enumerate(detections):
        for kp in kps:
            best = None
            best_d = None
            for pi, pose in enumerate(gt_frame.poses):
                ref = pose.joints[j]
                if ref is None or slots[pi][j] is not None:
                    continue
                d = ref.distance_to(kp)
                if d <= max_dist and (best_d is None or d < best_d):
                    best, best_d = pi, d
            if best is not None:
                slots[best][j] = kp
    poses = [Pose(joints=tuple(row)) for row in slots
             if any(kp is not None for kp in row)]
    return FramePoses(frame_index=gt_frame.frame_index, poses=poses)


__all__ = [
    "MOTION_MODELS", "OcclusionWindow", "ScenarioConfig", "NoiseConfig",
    "SequenceAnnotation", "BeliefMap", "generate_sequence",
    "corrupt_detections", "oracle_tff", "oracle_optical_flow",
    "render_beliefmaps", "nms_detect", "group_nms_detections",
]
