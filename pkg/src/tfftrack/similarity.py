"""Pairwise association potentials between poses of consecutive frames.

The flow-field potential integrates the field along each joint's candidate
displacement; the four baselines (IoU, PCKh, OKS, optical flow) score the
same pose pairs from geometry alone or from a dense displacement grid.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import Keypoint, Pose, SkeletonConfig, pose_bbox
from .flowfield import FlowFieldStack, GridField


class PotentialKind(enum.Enum):
    TFF = "tff"
    IOU = "iou"
    PCKH = "pckh"
    OKS = "oks"
    OPTICAL_FLOW = "flow"


@dataclass
class FlowGrid:
    """Dense per-pixel displacement grid (in pixels), e.g. optical flow."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float64)
        if self.data.ndim != 3 or self.data.shape[2] != 2:
            raise ValueError("flow data must have shape (height, width, 2)")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("flow data must be finite")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @classmethod
    def zeros(cls, width: int, height: int) -> "FlowGrid":
        return cls(np.zeros((height, width, 2)))


@dataclass(frozen=True)
class SimilarityParams:
    tau_delta: float = 2.0
    quadrature_steps: int = 10
    sigma_flow: float = 30.0
    pckh_threshold: float = 0.5

    def __post_init__(self):
        if self.tau_delta < 0:
            raise ValueError("tau_delta must be nonnegative")
        if self.quadrature_steps < 2:
            raise ValueError("quadrature_steps must be at least 2")
        if not self.sigma_flow > 0:
            raise ValueError("sigma_flow must be positive")
        if not self.pckh_threshold > 0:
            raise ValueError("pckh_threshold must be positive")


def flow_aggregate(field: GridField, p_prev: Keypoint, p_curr: Keypoint,
                   steps: int = 10, scale: float = 1.0) -> float:
    """Line integral of the field projected on the candidate displacement.

    Integrates dot(T(i(o)), u) for o in [0, 1] along the segment
    i(o) = (1 - o) p_prev + o p_curr with unit direction u, using the
    midpoint rule with `steps` samples. scale converts image coordinates
    to grid cells for coarse fields. Close to 1 when the field agrees
    with the motion, negative when it opposes it.
    """
    if (p_prev.x, p_prev.y) == (p_curr.x, p_curr.y):
        raise ValueError("coincident keypoints: use stationary branch")
    return kernels.line_integral(field.data,
                                 p_prev.x / scale, p_prev.y / scale,
                                 p_curr.x / scale, p_curr.y / scale,
                                 int(steps))


def joint_potential(field: GridField, p_prev: Keypoint, p_curr: Keypoint,
                    params: SimilarityParams, scale: float = 1.0) -> float:
    """Per-joint similarity: 1 for near-stationary joints, else the integral."""
    if p_prev.distance_to(p_curr) < params.tau_delta:
        return 1.0
    return flow_aggregate(field, p_prev, p_curr,
                          params.quadrature_steps, scale)


def person_potential(pose_prev: Pose, pose_curr: Pose,
                     fields: FlowFieldStack, params: SimilarityParams) -> float:
    """Sum of joint potentials over joints present in both poses.

    Unnormalized on purpose: more shared joints mean more accumulated
    evidence, and opposite-motion joints subtract from the total.
    """
    if len(pose_prev) != len(pose_curr):
        raise ValueError("poses differ in joint count")
    if len(pose_prev) != fields.joint_count:
        raise ValueError("field stack joint count does not match poses")
    total = 0.0
    for j in pose_prev.common_joints(pose_curr):
        total += joint_potential(fields.fields[j], pose_prev.joints[j],
                                 pose_curr.joints[j], params, fields.scale)
    return total


def iou_potential(pose_prev: Pose, pose_curr: Pose,
                  pad_fraction: float = 0.0) -> float:
    """Intersection over union of the two pose bounding boxes."""
    a = pose_bbox(pose_prev, pad_fraction)
    b = pose_bbox(pose_curr, pad_fraction)
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    inter = max(ix, 0.0) * max(iy, 0.0)
    union = a.area + b.area - inter
    if union <= 0.0:
        # both boxes degenerate to points; identical points count as a match
        return 1.0 if a == b else 0.0
    return inter / union


def _head_size(pose: Pose, skeleton: SkeletonConfig) -> float:
    top, neck = skeleton.head_pair
    a = pose.joints[top]
    b = pose.joints[neck]
    if a is None or b is None:
        raise ValueError("undefined head size: head joints missing")
    h = a.distance_to(b)
    if h == 0.0:
        raise ValueError("undefined head size: degenerate head segment")
    return h


def pckh_potential(pose_prev: Pose, pose_curr: Pose,
                   skeleton: SkeletonConfig, threshold: float = 0.5) -> float:
    """Fraction of common joints within threshold * head size.

    The head size is measured on the previous-frame pose. Poses with no
    common joint score 0.
    """
    h = _head_size(pose_prev, skeleton)
    common = pose_prev.common_joints(pose_curr)
    if not common:
        return 0.0
    hits = sum(
        1 for j in common
        if pose_prev.joints[j].distance_to(pose_curr.joints[j]) <= threshold * h)
    return hits / len(common)


def oks_potential(pose_prev: Pose, pose_curr: Pose,
                  skeleton: SkeletonConfig) -> float:
    """Object keypoint similarity with per-joint falloff constants.

    Distances are normalized by the previous pose's scale, the square
    root of its bounding-box area.
    """
    s = math.sqrt(pose_bbox(pose_prev, 0.0).area)
    if s == 0.0:
        raise ValueError("zero object scale: degenerate pose")
    common = pose_prev.common_joints(pose_curr)
    if not common:
        return 0.0
    total = 0.0
    for j in common:
        d = pose_prev.joints[j].distance_to(pose_curr.joints[j])
        kappa = skeleton.oks_kappas[j]
        total += math.exp(-(d * d) / (2.0 * s * s * kappa * kappa))
    return total / len(common)


def optical_flow_potential(pose_prev: Pose, pose_curr: Pose, flow: FlowGrid,
                           sigma_flow: float = 30.0) -> float:
    """Sum over common joints of a Gaussian score on the flow residual.

    Each previous joint is advected by the bilinearly sampled flow; the
    score decays with the squared distance between the advected point
    and the current joint, divided by sigma_flow squared.
    """
    total = 0.0
    for j in pose_prev.common_joints(pose_curr):
        a = pose_prev.joints[j]
        b = pose_curr.joints[j]
        fu, fv = kernels.sample_bilinear(flow.data, a.x, a.y)
        rx = b.x - (a.x + fu)
        ry = b.y - (a.y + fv)
        total += math.exp(-(rx * rx + ry * ry) / (sigma_flow * sigma_flow))
    return total


__all__ = [
    "PotentialKind", "FlowGrid", "SimilarityParams",
    "flow_aggregate", "joint_potential", "person_potential",
    "iou_potential", "pckh_potential", "oks_potential",
    "optical_flow_potential",
]
