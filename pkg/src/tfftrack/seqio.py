"""JSON serialization for sequences, detections and tracks.

Sequence schema (one document per sequence):

    {
      "skeleton": {"joint_names": [...], "head_pair": [a, b],
                   "oks_kappas": [...]},
      "width": W, "height": H,
      "frames": [
        {"index": 0,
         "poses": [{"id": 3, "joints": [[x, y, conf] | null, ...]}]}
      ],
      "ignore_masks": [{"runs": [...]} | null, ...]   // optional
    }

Ground truth carries "id" per pose, detections omit it. Ignore masks use
row-major run-length encoding with alternating run lengths, starting
with the number of leading zeros. Track files replace "frames" with
"tracks": [{"id", "birth_frame", "entries": [{"frame", "joints"}]}].
All writers emit sorted keys and a trailing newline so identical data
produces identical bytes.
"""

from __future__ import annotations

import json

import numpy as np

from .core import FramePoses, Keypoint, Pose, SkeletonConfig, Track, TrackSet
from .flowfield import IgnoreMask
from .synth import SequenceAnnotation


def skeleton_to_json(skeleton: SkeletonConfig) -> dict:
    return {
        "joint_names": list(skeleton.joint_names),
        "head_pair": list(skeleton.head_pair),
        "oks_kappas": list(skeleton.oks_kappas),
    }


def skeleton_from_json(obj: dict) -> SkeletonConfig:
    return SkeletonConfig(joint_names=tuple(obj["joint_names"]),
                          head_pair=tuple(obj["head_pair"]),
                          oks_kappas=tuple(obj["oks_kappas"]))


def _joints_to_json(pose: Pose) -> list:
    return [None if kp is None else [kp.x, kp.y, kp.confidence]
            for kp in pose.joints]


def _joints_from_json(items: list) -> Pose:
    joints = tuple(None if item is None else Keypoint(*item)
                   for item in items)
    return Pose(joints=joints)


def mask_to_runs(mask: IgnoreMask) -> list:
    """Row-major RLE with alternating runs, first run counts zeros."""
    flat = mask.data.ravel()
    runs = []
    current = 0
    length = 0
    for value in flat:
        if value == current:
            length += 1
        else:
            runs.append(length)
            current = 1 - current
            length = 1
    runs.append(length)
    return runs


def runs_to_mask(runs: list, width: int, height: int) -> IgnoreMask:
    flat = np.empty(width * height, dtype=np.uint8)
    pos = 0
    value = 0
    for run in runs:
        flat[pos:pos + run] = value
        pos += run
        value = 1 - value
    if pos != flat.size:
        raise ValueError("mask runs do not cover the full grid")
    return IgnoreMask(flat.reshape(height, width))


def _frame_to_json(frame: FramePoses, with_ids: bool) -> dict:
    poses = []
    for i, pose in enumerate(frame.poses):
        entry = {"joints": _joints_to_json(pose)}
        if with_ids:
            entry["id"] = frame.ids[i]
        poses.append(entry)
    return {"index": frame.frame_index, "poses": poses}


def _frame_from_json(obj: dict) -> FramePoses:
    poses = []
    ids = []
    for entry in obj["poses"]:
        poses.append(_joints_from_json(entry["joints"]))
        ids.append(entry.get("id"))
    has_ids = [i is not None for i in ids]
    if any(has_ids) and not all(has_ids):
        raise ValueError("frame mixes identified and anonymous poses")
    return FramePoses(frame_index=obj["index"], poses=poses,
                      ids=ids if all(has_ids) else None)


def _dump(obj: dict, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_sequence(path, annotation: SequenceAnnotation):
    """Write ground truth with identities and optional ignore masks."""
    obj = {
        "skeleton": skeleton_to_json(annotation.skeleton),
        "width": annotation.width,
        "height": annotation.height,
        "frames": [_frame_to_json(f, with_ids=f.ids is not None)
                   for f in annotation.frames],
    }
    if annotation.ignore_masks is not None:
        obj["ignore_masks"] = [{"runs": mask_to_runs(m)}
                               for m in annotation.ignore_masks]
    _dump(obj, path)


def write_detections(path, frames: list, skeleton: SkeletonConfig,
                     width: int, height: int):
    obj = {
        "skeleton": skeleton_to_json(skeleton),
        "width": width,
        "height": height,
        "frames": [_frame_to_json(f, with_ids=False) for f in frames],
    }
    _dump(obj, path)


def read_sequence(path) -> SequenceAnnotation:
    """Read a sequence file; detections come back with ids set to None."""
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    skeleton = skeleton_from_json(obj["skeleton"])
    width = int(obj["width"])
    height = int(obj["height"])
    frames = [_frame_from_json(f) for f in obj["frames"]]
    masks = None
    if "ignore_masks" in obj:
        masks = []
        for item in obj["ignore_masks"]:
            masks.append(None if item is None
                         else runs_to_mask(item["runs"], width, height))
        if any(m is None for m in masks):
            full = IgnoreMask.ones(width, height)
            masks = [full if m is None else m for m in masks]
    return SequenceAnnotation(frames=frames, skeleton=skeleton,
                              width=width, height=height,
                              ignore_masks=masks)


def write_tracks(path, tracks: TrackSet, skeleton: SkeletonConfig,
                 width: int, height: int):
    obj = {
        "skeleton": skeleton_to_json(skeleton),
        "width": width,
        "height": height,
        "tracks": [
            {
                "id": t.id,
                "birth_frame": t.birth_frame,
                "entries": [{"frame": fi, "joints": _joints_to_json(pose)}
                            for fi, pose in t.entries],
            }
            for t in tracks.tracks
        ],
    }
    _dump(obj, path)


def read_tracks(path):
    """Returns (TrackSet, SkeletonConfig, width, height)."""
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    skeleton = skeleton_from_json(obj["skeleton"])
    tracks = []
    for item in obj["tracks"]:
        entries = [(e["frame"], _joints_from_json(e["joints"]))
                   for e in item["entries"]]
        tracks.append(Track(id=item["id"], birth_frame=item["birth_frame"],
                            entries=entries))
    next_id = max((t.id for t in tracks), default=-1) + 1
    return (TrackSet(tracks=tracks, next_id=next_id), skeleton,
            int(obj["width"]), int(obj["height"]))


__all__ = [
    "skeleton_to_json", "skeleton_from_json",
    "mask_to_runs", "runs_to_mask",
    "write_sequence", "write_detections", "read_sequence",
    "write_tracks", "read_tracks",
]
