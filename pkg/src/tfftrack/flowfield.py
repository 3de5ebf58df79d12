"""Temporal flow fields: ribbon supports, rendering, aggregation and loss.

A flow field stores one unit direction vector per pixel on a ribbon
around a joint's motion segment and (0, 0) everywhere else. Aggregation
over several persons averages the nonzero vectors pixel by pixel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import Keypoint, joint_displacement


@dataclass
class GridField:
    """Dense 2-channel float vector field over an integer pixel grid."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.float64)
        if self.data.ndim != 3 or self.data.shape[2] != 2:
            raise ValueError("field data must have shape (height, width, 2)")
        if self.data.shape[0] < 1 or self.data.shape[1] < 1:
            raise ValueError("field dimensions must be at least 1x1")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("field data must be finite")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @classmethod
    def zeros(cls, width: int, height: int) -> "GridField":
        return cls(np.zeros((height, width, 2)))


@dataclass
class FlowFieldStack:
    """One GridField per joint class, all sharing dimensions.

    scale is the pixels-per-cell ratio of the grid relative to image
    coordinates; 1 means the field is sampled at image resolution.
    """

    fields: list
    scale: float = 1.0

    def __post_init__(self):
        if not self.fields:
            raise ValueError("empty field stack")
        dims = {(f.width, f.height) for f in self.fields}
        if len(dims) != 1:
            raise ValueError("all fields in a stack must share dimensions")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    @property
    def joint_count(self) -> int:
        return len(self.fields)

    @property
    def width(self) -> int:
        return self.fields[0].width

    @property
    def height(self) -> int:
        return self.fields[0].height

    def as_array(self) -> np.ndarray:
        """Stacked (J, height, width, 2) view used by the file writers."""
        return np.stack([f.data for f in self.fields])


@dataclass
class IgnoreMask:
    """Binary per-pixel mask; 0 marks ignore regions, 1 evaluated area."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.uint8)
        if self.data.ndim != 2:
            raise ValueError("mask must be 2-D")
        if not np.all((self.data == 0) | (self.data == 1)):
            raise ValueError("mask values must be 0 or 1")

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @classmethod
    def ones(cls, width: int, height: int) -> "IgnoreMask":
        return cls(np.ones((height, width), dtype=np.uint8))

    @classmethod
    def from_rects(cls, width: int, height: int, rects) -> "IgnoreMask":
        """Build a mask that ignores the given (x0, y0, x1, y1) rectangles."""
        mask = cls.ones(width, height)
        for x0, y0, x1, y1 in rects:
            xa, xb = sorted((int(x0), int(x1)))
            ya, yb = sorted((int(y0), int(y1)))
            mask.data[max(ya, 0):yb + 1, max(xa, 0):xb + 1] = 0
        return mask


@dataclass(frozen=True)
class SupportParams:
    """Ribbon half-width sigma and the stationary threshold tau_delta."""

    sigma: float = 1.0
    tau_delta: float = 2.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if self.tau_delta < 0:
            raise ValueError("tau_delta must be nonnegative")


def tff_support(p_prev: Keypoint, p_curr: Keypoint, sigma: float,
                dims: tuple) -> set:
    """Integer pixels covered by the motion ribbon of one joint.

    dims is (width, height). Zero motion yields an empty set by
    convention: the direction is undefined, so no vectors are emitted.
    """
    width, height = dims
    v, lam = joint_displacement(p_prev, p_curr)
    if lam == 0.0:
        return set()
    counts = np.zeros((height, width), dtype=np.int32)
    sums = np.zeros((height, width, 2))
    kernels.ribbon_accumulate(sums, counts, p_prev.x, p_prev.y,
                              float(v[0]), float(v[1]), lam, sigma,
                              float(v[0]), float(v[1]))
    ys, xs = np.nonzero(counts)
    return {(int(x), int(y)) for x, y in zip(xs, ys)}


def render_person_tff(p_prev: Keypoint, p_curr: Keypoint, sigma: float,
                      dims: tuple) -> GridField:
    """Field holding the unit motion direction on the ribbon, zero outside."""
    width, height = dims
    sums = np.zeros((height, width, 2))
    counts = np.zeros((height, width), dtype=np.int32)
    v, lam = joint_displacement(p_prev, p_curr)
    if lam > 0.0:
        kernels.ribbon_accumulate(sums, counts, p_prev.x, p_prev.y,
                                  float(v[0]), float(v[1]), lam, sigma,
                                  float(v[0]), float(v[1]))
    return GridField(sums)


def aggregate_tff(person_fields: list) -> GridField:
    """Pixel-wise mean of the nonzero vectors across per-person fields."""
    if not person_fields:
        raise ValueError("nothing to aggregate")
    dims = {(f.width, f.height) for f in person_fields}
    if len(dims) != 1:
        raise ValueError("aggregated fields must share dimensions")
    total = np.zeros_like(person_fields[0].data)
    count = np.zeros(total.shape[:2], dtype=np.int64)
    for f in person_fields:
        total += f.data
        count += (f.data[:, :, 0] != 0.0) | (f.data[:, :, 1] != 0.0)
    # where count is 0 the summed vector is 0 too, so dividing by 1 is safe
    out = total / np.maximum(count, 1)[:, :, None]
    return GridField(out)


def tff_loss(predicted: FlowFieldStack, target: FlowFieldStack,
             mask: IgnoreMask) -> float:
    """Masked squared L2 distance between two field stacks.

    Pixels where the mask is 0 contribute nothing, so disagreements on
    ignore regions are free.
    """
    if predicted.joint_count != target.joint_count:
        raise ValueError("field stacks differ in joint count")
    if (predicted.width, predicted.height) != (target.width, target.height):
        raise ValueError("field stacks differ in dimensions")
    if (mask.width, mask.height) != (predicted.width, predicted.height):
        raise ValueError("mask dimensions do not match the fields")
    weights = mask.data.astype(np.float64)
    loss = 0.0
    for pred, tgt in zip(predicted.fields, target.fields):
        diff = pred.data - tgt.data
        loss += float(np.sum(weights * np.sum(diff * diff, axis=2)))
    return loss


def sample_field(field: GridField, p) -> np.ndarray:
    """Bilinear field value at a continuous point, clamped at the borders."""
    x, y = float(p[0]), float(p[1])
    u, v = kernels.sample_bilinear(field.data, x, y)
    return np.array([u, v])


__all__ = [
    "GridField", "FlowFieldStack", "IgnoreMask", "SupportParams",
    "tff_support", "render_person_tff", "aggregate_tff", "tff_loss",
    "sample_field",
]
