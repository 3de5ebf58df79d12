"""CLEAR-MOT tracking metrics and pose mAP at the per-joint level.

Evaluation walks ground truth frame by frame: per joint class, predicted
joints are matched to GT joints by a distance-gated Hungarian solve, and
misses, false positives and identity switches are accumulated per class.
An identity switch is counted when a GT identity's matched track id
differs from its most recent previous match in the same joint class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import Pose, SkeletonConfig, TrackSet, pose_bbox

# cost assigned to gated-out pairs; must exceed any feasible total so the
# solver prefers max cardinality among allowed pairs
_DISALLOWED = 1e9

# paper-style table layout: column label -> joint name substrings
_TABLE_GROUPS = (
    ("Head", ("head_top", "nose", "neck")),
    ("Shou", ("right_shoulder", "left_shoulder")),
    ("Elb", ("right_elbow", "left_elbow")),
    ("Wri", ("right_wrist", "left_wrist")),
    ("Hip", ("right_hip", "left_hip")),
    ("Knee", ("right_knee", "left_knee")),
    ("Ankl", ("right_ankle", "left_ankle")),
)


@dataclass
class MotCounts:
    """Raw CLEAR-MOT event counts for one joint class (or aggregated)."""

    gt: int = 0
    tp: int = 0
    fp: int = 0
    misses: int = 0
    id_switches: int = 0
    dist_sum: float = 0.0  # sum of gate-normalized match distances

    def add(self, other: "MotCounts"):
        self.gt += other.gt
        self.tp += other.tp
        self.fp += other.fp
        self.misses += other.misses
        self.id_switches += other.id_switches
        self.dist_sum += other.dist_sum

    @property
    def mota(self) -> float:
        if self.gt == 0:
            return float("nan")
        return 1.0 - (self.misses + self.fp + self.id_switches) / self.gt

    @property
    def motp(self) -> float:
        """Localization similarity of matches, 1 = perfect, in [0, 1]."""
        if self.tp == 0:
            return float("nan")
        return 1.0 - self.dist_sum / self.tp

    @property
    def precision(self) -> float:
        if self.tp + self.fp == 0:
            return float("nan")
        return self.tp / (self.tp + self.fp)

    @property
    def recall(self) -> float:
        if self.gt == 0:
            return float("nan")
        return self.tp / self.gt


@dataclass
class MotReport:
    joint_names: tuple
    per_joint: list
    total: MotCounts = field(default_factory=MotCounts)

    def to_json(self) -> dict:
        def block(c: MotCounts) -> dict:
            return {
                "gt": c.gt, "tp": c.tp, "fp": c.fp, "misses": c.misses,
                "id_switches": c.id_switches,
                "mota": _none_if_nan(c.mota),
                "mota_percent": _none_if_nan(100.0 * c.mota),
                "motp": _none_if_nan(c.motp),
                "motp_percent": _none_if_nan(100.0 * c.motp),
                "precision": _none_if_nan(c.precision),
                "recall": _none_if_nan(c.recall),
            }
        return {
            "per_joint": {name: block(c) for name, c
                          in zip(self.joint_names, self.per_joint)},
            "total": block(self.total),
        }


@dataclass
class MapReport:
    joint_names: tuple
    per_joint_ap: list
    mean_ap: float

    def to_json(self) -> dict:
        return {
            "per_joint_ap": {name: _none_if_nan(ap) for name, ap
                             in zip(self.joint_names, self.per_joint_ap)},
            "mean_ap": _none_if_nan(self.mean_ap),
        }


def _none_if_nan(x: float):
    return None if isinstance(x, float) and math.isnan(x) else x


def head_gate(pose: Pose, skeleton: SkeletonConfig, threshold: float) -> float:
    """Match gate in pixels for one GT pose: threshold times head size.

    Falls back to a quarter of the bounding-box scale when the head
    segment is missing or degenerate, so occluded heads stay evaluable.
    """
    top, neck = skeleton.head_pair
    a = pose.joints[top]
    b = pose.joints[neck]
    h = a.distance_to(b) if a is not None and b is not None else 0.0
    if h == 0.0:
        h = math.sqrt(pose_bbox(pose, 0.0).area) / 4.0
    if h == 0.0:
        raise ValueError("undefined head size: degenerate pose")
    return threshold * h


def _frames_by_index(tracks: TrackSet) -> dict:
    by_frame: dict = {}
    for track in tracks.tracks:
        for frame_index, pose in track.entries:
            by_frame.setdefault(frame_index, []).append((track.id, pose))
    return by_frame


def _match_frame_joint(gt_items, pred_items):
    """Gated min-cost matching; returns [(gt_pos, pred_pos, distance)].

    gt_items are (id, keypoint, gate); pred_items are (id, keypoint).
    Disallowed pairs cost enough that the solver maximizes the number of
    in-gate matches first and total distance second.
    """
    if not gt_items or not pred_items:
        return []
    cost = np.empty((len(gt_items), len(pred_items)))
    for gi, (_, gkp, gate) in enumerate(gt_items):
        for pi, (_, pkp) in enumerate(pred_items):
            d = gkp.distance_to(pkp)
            cost[gi, pi] = d if d <= gate else _DISALLOWED
    rows, cols = linear_sum_assignment(cost)
    return [(int(gi), int(pi), float(cost[gi, pi]))
            for gi, pi in zip(rows, cols) if cost[gi, pi] < _DISALLOWED]


def evaluate_mot(pred: TrackSet, gt, gate: float = 0.5) -> MotReport:
    """CLEAR-MOT evaluation of predicted tracks against a GT annotation.

    `gate` is the PCKh-style threshold multiplying each GT pose's head
    size. False positives inside ignore regions are not counted.
    """
    skeleton = gt.skeleton
    joint_count = skeleton.joint_count
    pred_by_frame = _frames_by_index(pred)
    gt_indices = {f.frame_index for f in gt.frames}
    extra = set(pred_by_frame) - gt_indices
    if extra:
        raise ValueError(f"frame range mismatch: predictions cover frames "
                         f"{sorted(extra)} absent from the ground truth")
    counts = [MotCounts() for _ in range(joint_count)]
    last_match: dict = {}
    for fi, frame in enumerate(gt.frames):
        if frame.ids is None and frame.poses:
            raise ValueError("ground truth frames must carry identities")
        mask = gt.ignore_masks[fi] if gt.ignore_masks is not None else None
        preds = pred_by_frame.get(frame.frame_index, [])
        gates = [head_gate(pose, skeleton, gate) for pose in frame.poses]
        for j in range(joint_count):
            gt_items = [(gid, pose.joints[j], g) for gid, pose, g
                        in zip(frame.ids or [], frame.poses, gates)
                        if pose.joints[j] is not None]
            pred_items = [(tid, pose.joints[j]) for tid, pose in preds
                          if pose.joints[j] is not None]
            c = counts[j]
            c.gt += len(gt_items)
            matches = _match_frame_joint(gt_items, pred_items)
            matched_gt = set()
            matched_pred = set()
            for gi, pi, d in matches:
                gid = gt_items[gi][0]
                tid = pred_items[pi][0]
                gate_px = gt_items[gi][2]
                c.tp += 1
                c.dist_sum += d / gate_px
                key = (gid, j)
                if key in last_match and last_match[key] != tid:
                    c.id_switches += 1
                last_match[key] = tid
                matched_gt.add(gi)
                matched_pred.add(pi)
            c.misses += len(gt_items) - len(matched_gt)
            for pi, (_, pkp) in enumerate(pred_items):
                if pi in matched_pred:
                    continue
                if mask is not None and _in_ignore_region(pkp, mask):
                    continue
                c.fp += 1
    report = MotReport(joint_names=tuple(skeleton.joint_names),
                       per_joint=counts)
    for c in counts:
        report.total.add(c)
    return report


def _in_ignore_region(kp, mask) -> bool:
    x = min(max(int(round(kp.x)), 0), mask.width - 1)
    y = min(max(int(round(kp.y)), 0), mask.height - 1)
    return mask.data[y, x] == 0


def evaluate_map(pred_frames: list, gt, gate: float = 0.5) -> MapReport:
    """Mean average precision of per-joint detections under the PCKh gate.

    Detections are consumed in descending confidence order; each one
    greedily claims the nearest unmatched GT joint of its class within
    the gate. AP uses all-point interpolation of the PR curve. Joint
    classes without any GT joint are excluded from the mean.
    """
    skeleton = gt.skeleton
    joint_count = skeleton.joint_count
    gt_by_frame = {f.frame_index: f for f in gt.frames}
    mask_by_frame = {}
    if gt.ignore_masks is not None:
        mask_by_frame = {f.frame_index: m for f, m
                         in zip(gt.frames, gt.ignore_masks)}
    aps = []
    for j in range(joint_count):
        gt_slots = {}  # frame -> list of [keypoint, gate, taken]
        gt_total = 0
        for frame in gt.frames:
            slots = []
            for pose in frame.poses:
                if pose.joints[j] is not None:
                    slots.append([pose.joints[j],
                                  head_gate(pose, skeleton, gate), False])
            gt_slots[frame.frame_index] = slots
            gt_total += len(slots)
        dets = []
        for frame in pred_frames:
            for pose in frame.poses:
                kp = pose.joints[j]
                if kp is not None:
                    dets.append((-kp.confidence, frame.frame_index,
                                 kp.x, kp.y, kp))
        dets.sort(key=lambda item: item[:4])
        hits = []
        for _, frame_index, _, _, kp in dets:
            slots = gt_slots.get(frame_index, [])
            best = None
            best_d = None
            for slot in slots:
                if slot[2]:
                    continue
                d = slot[0].distance_to(kp)
                if d <= slot[1] and (best_d is None or d < best_d):
                    best, best_d = slot, d
            if best is not None:
                best[2] = True
                hits.append(True)
            else:
                mask = mask_by_frame.get(frame_index)
                if mask is not None and _in_ignore_region(kp, mask):
                    continue
                hits.append(False)
        aps.append(_average_precision(hits, gt_total))
    valid = [ap for ap in aps if not math.isnan(ap)]
    mean_ap = sum(valid) / len(valid) if valid else float("nan")
    return MapReport(joint_names=tuple(skeleton.joint_names),
                     per_joint_ap=aps, mean_ap=mean_ap)


def _average_precision(hits: list, gt_total: int) -> float:
    if gt_total == 0:
        return float("nan")
    if not hits:
        return 0.0
    tp = np.cumsum([1 if h else 0 for h in hits])
    fp = np.cumsum([0 if h else 1 for h in hits])
    recall = tp / gt_total
    precision = tp / (tp + fp)
    # precision envelope, then sum the area under the stepwise curve
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    prev_r = 0.0
    ap = 0.0
    for r, p in zip(recall, envelope):
        ap += (r - prev_r) * p
        prev_r = r
    return float(ap)


def group_counts(report: MotReport):
    """Aggregate per-joint counts into the paper-style table columns.

    Joint names outside the canonical groups fall back to one column per
    joint. Returns a list of (label, MotCounts).
    """
    names = list(report.joint_names)
    grouped = []
    covered = set()
    for label, members in _TABLE_GROUPS:
        idx = [i for i, n in enumerate(names) if n in members]
        if idx:
            agg = MotCounts()
            for i in idx:
                agg.add(report.per_joint[i])
                covered.add(i)
            grouped.append((label, agg))
    for i, name in enumerate(names):
        if i not in covered:
            grouped.append((name, report.per_joint[i]))
    grouped.append(("Total", report.total))
    return grouped


def format_mot_table(report: MotReport) -> str:
    """Aligned text table of MOTA/MOTP/Prec/Rec percentages per column."""
    columns = group_counts(report)
    rows = [("MOTA", "mota"), ("MOTP", "motp"),
            ("Prec", "precision"), ("Rec", "recall")]
    width = max(6, *(len(label) + 1 for label, _ in columns))
    lines = ["".join(["      "] + [f"{label:>{width}}" for label, _ in columns])]
    for row_label, attr in rows:
        cells = []
        for _, c in columns:
            value = getattr(c, attr)
            cells.append("     -".rjust(width) if math.isnan(value)
                         else f"{100.0 * value:>{width}.1f}")
        lines.append("".join([f"{row_label:<6}"] + cells))
    return "\n".join(lines)


__all__ = [
    "MotCounts", "MotReport", "MapReport", "head_gate",
    "evaluate_mot", "evaluate_map", "group_counts", "format_mot_table",
]
