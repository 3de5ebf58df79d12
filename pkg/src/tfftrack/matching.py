"""Frame-to-frame bipartite assignment and track lifecycle.

Rows of a potential matrix are previous-frame tracks, columns are
current-frame detections. The production solver is greedy over globally
largest potentials; a Hungarian solver is kept as an optimality oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import FramePoses, TrackSet
from .flowfield import FlowFieldStack
from .similarity import (FlowGrid, PotentialKind, SimilarityParams,
                         iou_potential, oks_potential, optical_flow_potential,
                         pckh_potential, person_potential)

# stand-in cost for ineligible cells inside the Hungarian solver; must
# dwarf any real potential (|psi| <= J in practice)
_BIG = 1e12


@dataclass
class PotentialMatrix:
    """Dense psi values, previous tracks along rows, detections along columns."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("potential matrix must be 2-D")
        bad = np.isnan(self.values) | (self.values == np.inf)
        if bad.any():
            raise ValueError("potentials must be finite or -inf")

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class MatchPolicy:
    """Acceptance threshold for pairs and the track pruning length."""

    accept_threshold: float = 0.0
    min_track_length: int = 7

    def __post_init__(self):
        if self.min_track_length < 1:
            raise ValueError("min_track_length must be at least 1")


@dataclass
class Assignment:
    pairs: list
    unmatched_rows: list
    unmatched_cols: list

    def __post_init__(self):
        rows = [r for r, _ in self.pairs]
        cols = [c for _, c in self.pairs]
        if len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
            raise ValueError("assignment reuses a row or column")
        n_rows = len(self.pairs) + len(self.unmatched_rows)
        n_cols = len(self.pairs) + len(self.unmatched_cols)
        if set(rows) | set(self.unmatched_rows) != set(range(n_rows)):
            raise ValueError("assignment does not partition the rows")
        if set(cols) | set(self.unmatched_cols) != set(range(n_cols)):
            raise ValueError("assignment does not partition the columns")

    def total(self, matrix: PotentialMatrix) -> float:
        return float(sum(matrix.values[r, c] for r, c in self.pairs))


@dataclass
class MatchContext:
    """Inputs the chosen potential kind needs beyond the two pose lists."""

    fields: FlowFieldStack | None = None
    flow: FlowGrid | None = None
    params: SimilarityParams = field(default_factory=SimilarityParams)
    skeleton: object = None
    pad_fraction: float = 0.0


def _cell_potential(prev_pose, curr_pose, kind, context):
    if kind is PotentialKind.TFF:
        return person_potential(prev_pose, curr_pose, context.fields,
                                context.params)
    if kind is PotentialKind.IOU:
        return iou_potential(prev_pose, curr_pose, context.pad_fraction)
    if kind is PotentialKind.PCKH:
        return pckh_potential(prev_pose, curr_pose, context.skeleton,
                              context.params.pckh_threshold)
    if kind is PotentialKind.OKS:
        return oks_potential(prev_pose, curr_pose, context.skeleton)
    if kind is PotentialKind.OPTICAL_FLOW:
        return optical_flow_potential(prev_pose, curr_pose, context.flow,
                                      context.params.sigma_flow)
    raise ValueError(f"unknown potential kind {kind!r}")


def build_potential_matrix(prev: list, curr: list, kind: PotentialKind,
                           context: MatchContext | None = None) -> PotentialMatrix:
    """Score every (previous pose, current pose) pair with one potential kind.

    Pairs whose potential is undefined (degenerate geometry, missing head
    and so on) get -inf and can never be matched.
    """
    context = context or MatchContext()
    if kind is PotentialKind.TFF and context.fields is None:
        raise ValueError("TFF potential requires a flow field stack")
    if kind is PotentialKind.OPTICAL_FLOW and context.flow is None:
        raise ValueError("optical flow potential requires a flow grid")
    if kind in (PotentialKind.PCKH, PotentialKind.OKS) and context.skeleton is None:
        from .core import default_skeleton
        context = MatchContext(fields=context.fields, flow=context.flow,
                               params=context.params,
                               skeleton=default_skeleton(),
                               pad_fraction=context.pad_fraction)
    values = np.empty((len(prev), len(curr)))
    for m, prev_pose in enumerate(prev):
        for n, curr_pose in enumerate(curr):
            try:
                values[m, n] = _cell_potential(prev_pose, curr_pose, kind,
                                               context)
            except ValueError:
                values[m, n] = -np.inf
    return PotentialMatrix(values)


def greedy_assign(matrix: PotentialMatrix, policy: MatchPolicy) -> Assignment:
    """Repeatedly take the largest remaining potential above the threshold.

    Ties break toward the lower row, then the lower column, so runs are
    reproducible.
    """
    vals = matrix.values
    n_rows, n_cols = vals.shape
    pairs = []
    if n_rows and n_cols:
        rows, cols = np.unravel_index(np.arange(vals.size), vals.shape)
        order = np.lexsort((cols, rows, -vals.ravel()))
        row_used = np.zeros(n_rows, dtype=bool)
        col_used = np.zeros(n_cols, dtype=bool)
        for k in order:
            r, c = int(rows[k]), int(cols[k])
            if not vals[r, c] > policy.accept_threshold:
                break  # sorted descending: nothing later qualifies either
            if row_used[r] or col_used[c]:
                continue
            row_used[r] = True
            col_used[c] = True
            pairs.append((r, c))
    pairs.sort()
    matched_rows = {r for r, _ in pairs}
    matched_cols = {c for _, c in pairs}
    return Assignment(
        pairs=pairs,
        unmatched_rows=[r for r in range(n_rows) if r not in matched_rows],
        unmatched_cols=[c for c in range(n_cols) if c not in matched_cols])


def hungarian_assign(matrix: PotentialMatrix, policy: MatchPolicy) -> Assignment:
    """Exact maximizer of the summed potentials under the one-to-one constraints.

    Cells at or below the acceptance threshold are excluded outright.
    Implemented by augmenting the matrix with one zero-gain dummy column
    per row, so leaving a row unmatched is always an option and negative
    potentials are never forced into the solution.
    """
    vals = matrix.values
    n_rows, n_cols = vals.shape
    pairs = []
    eligible = vals > policy.accept_threshold
    if n_rows and n_cols and eligible.any():
        if np.abs(vals[eligible]).max() >= _BIG / 1e3:
            raise ValueError("potentials too large for the dummy padding")
        gains = np.where(eligible, vals, -_BIG)
        dummies = np.full((n_rows, n_rows), -_BIG)
        np.fill_diagonal(dummies, 0.0)
        augmented = np.hstack([gains, dummies])
        rows, cols = linear_sum_assignment(augmented, maximize=True)
        pairs = sorted((int(r), int(c)) for r, c in zip(rows, cols)
                       if c < n_cols and eligible[r, c])
    matched_rows = {r for r, _ in pairs}
    matched_cols = {c for _, c in pairs}
    return Assignment(
        pairs=pairs,
        unmatched_rows=[r for r in range(n_rows) if r not in matched_rows],
        unmatched_cols=[c for c in range(n_cols) if c not in matched_cols])


def advance_tracks(tracks: TrackSet, assignment: Assignment,
                   curr: FramePoses, prev_frame_index: int | None = None) -> TrackSet:
    """Grow matched tracks by one frame and start tracks for new detections.

    Assignment rows index the tracks alive at the previous frame (those
    whose last entry sits exactly there, in creation order); unmatched
    tracks are retired simply by not growing. Mutates and returns `tracks`.
    """
    if prev_frame_index is None:
        prev_frame_index = max((t.last_frame for t in tracks.tracks),
                               default=None)
    alive = [t for t in tracks.tracks if t.last_frame == prev_frame_index] \
        if prev_frame_index is not None else []
    matched_cols = set()
    for r, c in assignment.pairs:
        if not 0 <= r < len(alive):
            raise ValueError(f"assignment row {r} out of range")
        if not 0 <= c < len(curr.poses):
            raise ValueError(f"assignment column {c} out of range")
        alive[r].append(curr.frame_index, curr.poses[c])
        matched_cols.add(c)
    for c, pose in enumerate(curr.poses):
        if c not in matched_cols:
            tracks.new_track(curr.frame_index, pose)
    return tracks


def prune_tracks(tracks: TrackSet, min_track_length: int) -> TrackSet:
    """Drop tracks shorter than min_track_length entries."""
    kept = [t for t in tracks.tracks if t.length >= min_track_length]
    return TrackSet(tracks=kept, next_id=tracks.next_id)


def track_sequence(frames: list, kind: PotentialKind, field_source,
                   policy: MatchPolicy | None = None,
                   context: MatchContext | None = None) -> TrackSet:
    """Online tracking over an ordered frame list.

    field_source is a callable (prev_frame, curr_frame) -> FlowFieldStack
    or FlowGrid, consulted once per consecutive pair; pass None for the
    geometric potentials. Pruning is left to the caller so that short
    but correct tracks can still be inspected.
    """
    policy = policy or MatchPolicy()
    base = context or MatchContext()
    tracks = TrackSet()
    prev_frame = None
    for frame in frames:
        if prev_frame is not None and frame.frame_index <= prev_frame.frame_index:
            raise ValueError("frame indices must be strictly increasing")
        if prev_frame is None:
            for pose in frame.poses:
                tracks.new_track(frame.frame_index, pose)
        else:
            alive = [t for t in tracks.tracks
                     if t.last_frame == prev_frame.frame_index]
            prev_poses = [t.entries[-1][1] for t in alive]
            ctx = base
            if field_source is not None:
                source = field_source(prev_frame, frame)
                if isinstance(source, FlowFieldStack):
                    ctx = MatchContext(fields=source, flow=base.flow,
                                       params=base.params,
                                       skeleton=base.skeleton,
                                       pad_fraction=base.pad_fraction)
                elif isinstance(source, FlowGrid):
                    ctx = MatchContext(fields=base.fields, flow=source,
                                       params=base.params,
                                       skeleton=base.skeleton,
                                       pad_fraction=base.pad_fraction)
                elif source is not None:
                    raise ValueError("field_source must yield a "
                                     "FlowFieldStack or FlowGrid")
            matrix = build_potential_matrix(prev_poses, frame.poses, kind, ctx)
            assignment = greedy_assign(matrix, policy)
            advance_tracks(tracks, assignment, frame,
                           prev_frame_index=prev_frame.frame_index)
        prev_frame = frame
    return tracks


__all__ = [
    "PotentialMatrix", "MatchPolicy", "Assignment", "MatchContext",
    "build_potential_matrix", "greedy_assign", "hungarian_assign",
    "advance_tracks", "prune_tracks", "track_sequence",
]
