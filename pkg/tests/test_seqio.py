import json

import numpy as np
import pytest

from tfftrack.core import FramePoses, TrackSet
from tfftrack.flowfield import IgnoreMask
from tfftrack.seqio import (
    mask_to_runs,
    read_sequence,
    read_tracks,
    runs_to_mask,
    skeleton_from_json,
    skeleton_to_json,
    write_detections,
    write_sequence,
    write_tracks,
)
from tfftrack.synth import ScenarioConfig, SequenceAnnotation, generate_sequence

from conftest import make_pose


def sample_annotation(seed=5):
    cfg = ScenarioConfig(persons=2, frames=4, width=160, height=160,
                         motion="linear", scale_range=(20.0, 32.0), seed=seed,
                         ignore_rects=[(0, 0, 15, 15)])
    return generate_sequence(cfg)


class TestSkeletonJson:
    def test_roundtrip(self, skeleton):
        back = skeleton_from_json(skeleton_to_json(skeleton))
        assert back == skeleton

    def test_roundtrip_tiny(self, tiny_skeleton):
        back = skeleton_from_json(skeleton_to_json(tiny_skeleton))
        assert back == tiny_skeleton


class TestMaskRuns:
    def test_known_pattern(self):
        mask = IgnoreMask(np.array([[0, 0, 1], [1, 1, 0]], dtype=np.uint8))
        runs = mask_to_runs(mask)
        assert runs == [2, 3, 1]
        back = runs_to_mask(runs, width=3, height=2)
        assert np.array_equal(back.data, mask.data)

    def test_leading_one_starts_with_zero_run(self):
        mask = IgnoreMask(np.array([[1, 1, 0, 0]], dtype=np.uint8))
        assert mask_to_runs(mask) == [0, 2, 2]

    def test_random_roundtrip(self, rng):
        for _ in range(30):
            h, w = rng.integers(1, 12, size=2)
            mask = IgnoreMask((rng.uniform(size=(h, w)) > 0.5)
                              .astype(np.uint8))
            back = runs_to_mask(mask_to_runs(mask), width=w, height=h)
            assert np.array_equal(back.data, mask.data)

    def test_incomplete_runs_rejected(self):
        with pytest.raises(ValueError):
            runs_to_mask([2, 1], width=3, height=2)


class TestSequenceRoundtrip:
    def test_ground_truth_roundtrip(self, tmp_path):
        ann = sample_annotation()
        path = tmp_path / "gt.json"
        write_sequence(path, ann)
        back = read_sequence(path)
        assert back.width == ann.width and back.height == ann.height
        assert back.skeleton == ann.skeleton
        assert len(back.frames) == len(ann.frames)
        for a, b in zip(ann.frames, back.frames):
            assert a.frame_index == b.frame_index
            assert a.ids == b.ids
            assert a.poses == b.poses
        assert back.ignore_masks is not None
        for m_a, m_b in zip(ann.ignore_masks, back.ignore_masks):
            assert np.array_equal(m_a.data, m_b.data)

    def test_file_level_determinism(self, tmp_path):
        ann = sample_annotation()
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        write_sequence(a, ann)
        write_sequence(b, read_sequence(a))
        assert a.read_bytes() == b.read_bytes()
        assert a.read_bytes().endswith(b"\n")

    def test_detections_have_no_ids(self, tmp_path, skeleton):
        frames = [FramePoses(0, [make_pose([(1.0, 2.0)] + [None] * 14,
                                           confidence=0.7)])]
        path = tmp_path / "det.json"
        write_detections(path, frames, skeleton, 64, 48)
        obj = json.loads(path.read_text())
        assert "id" not in obj["frames"][0]["poses"][0]
        back = read_sequence(path)
        assert back.frames[0].ids is None
        kp = back.frames[0].poses[0].joints[0]
        assert (kp.x, kp.y, kp.confidence) == (1.0, 2.0, 0.7)

    def test_empty_frames_keep_gt_ids(self, tmp_path, skeleton):
        ann = SequenceAnnotation(
            frames=[FramePoses(0, [], ids=[]),
                    FramePoses(1, [make_pose([(3, 3)] + [None] * 14)],
                               ids=[0])],
            skeleton=skeleton, width=32, height=32)
        path = tmp_path / "gt.json"
        write_sequence(path, ann)
        back = read_sequence(path)
        assert back.frames[0].ids == []
        assert back.frames[1].ids == [0]

    def test_mixed_id_presence_rejected(self, tmp_path, skeleton):
        doc = {
            "skeleton": skeleton_to_json(skeleton),
            "width": 10, "height": 10,
            "frames": [{"index": 0, "poses": [
                {"id": 1, "joints": [[1, 1, 1.0]] + [None] * 14},
                {"joints": [[2, 2, 1.0]] + [None] * 14},
            ]}],
        }
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError, match="mixes"):
            read_sequence(path)

    def test_missing_masks_read_as_none(self, tmp_path, skeleton):
        ann = SequenceAnnotation(
            frames=[FramePoses(0, [make_pose([(3, 3)] + [None] * 14)],
                               ids=[0])],
            skeleton=skeleton, width=16, height=16)
        path = tmp_path / "gt.json"
        write_sequence(path, ann)
        assert read_sequence(path).ignore_masks is None


class TestTracksRoundtrip:
    def test_roundtrip(self, tmp_path, skeleton):
        ts = TrackSet()
        t = ts.new_track(0, make_pose([(1, 1)] + [None] * 14))
        t.append(1, make_pose([(2, 2)] + [None] * 14, confidence=0.5))
        ts.new_track(2, make_pose([None] * 14 + [(9, 9)]))
        path = tmp_path / "tracks.json"
        write_tracks(path, ts, skeleton, 40, 30)
        back, sk, w, h = read_tracks(path)
        assert (w, h) == (40, 30)
        assert sk == skeleton
        assert len(back.tracks) == 2
        assert back.tracks[0].entries == ts.tracks[0].entries
        assert back.tracks[1].birth_frame == 2
        assert back.next_id == ts.next_id

    def test_empty_trackset(self, tmp_path, skeleton):
        path = tmp_path / "tracks.json"
        write_tracks(path, TrackSet(), skeleton, 8, 8)
        back, _, _, _ = read_tracks(path)
        assert back.tracks == [] and back.next_id == 0

    def test_byte_identical_rewrite(self, tmp_path, skeleton):
        ts = TrackSet()
        ts.new_track(0, make_pose([(1.25, 2.5)] + [None] * 14))
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        write_tracks(a, ts, skeleton, 8, 8)
        back, sk, w, h = read_tracks(a)
        write_tracks(b, back, sk, w, h)
        assert a.read_bytes() == b.read_bytes()
