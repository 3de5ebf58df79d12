"""Online multi-person pose tracking with temporal flow fields."""

from .core import (BBox, FramePoses, Keypoint, Pose, SkeletonConfig, Track,
                   TrackSet, default_skeleton, joint_displacement, pose_bbox)
from .flowfield import (FlowFieldStack, GridField, IgnoreMask, SupportParams,
                        aggregate_tff, render_person_tff, sample_field,
                        tff_loss, tff_support)
from .matching import (Assignment, MatchContext, MatchPolicy, PotentialMatrix,
                       advance_tracks, build_potential_matrix, greedy_assign,
                       hungarian_assign, prune_tracks, track_sequence)
from .metrics import (MapReport, MotCounts, MotReport, evaluate_map,
                      evaluate_mot, format_mot_table)
from .similarity import (FlowGrid, PotentialKind, SimilarityParams,
                         flow_aggregate, iou_potential, joint_potential,
                         oks_potential, optical_flow_potential,
                         pckh_potential, person_potential)
from .synth import (BeliefMap, NoiseConfig, OcclusionWindow, ScenarioConfig,
                    SequenceAnnotation, corrupt_detections, generate_sequence,
                    nms_detect, oracle_optical_flow, oracle_tff,
                    render_beliefmaps)

__version__ = "0.1.0"

__all__ = [
    "BBox", "FramePoses", "Keypoint", "Pose", "SkeletonConfig", "Track",
    "TrackSet", "default_skeleton", "joint_displacement", "pose_bbox",
    "FlowFieldStack", "GridField", "IgnoreMask", "SupportParams",
    "aggregate_tff", "render_person_tff", "sample_field", "tff_loss",
    "tff_support",
    "Assignment", "MatchContext", "MatchPolicy", "PotentialMatrix",
    "advance_tracks", "build_potential_matrix", "greedy_assign",
    "hungarian_assign", "prune_tracks", "track_sequence",
    "MapReport", "MotCounts", "MotReport", "evaluate_map", "evaluate_mot",
    "format_mot_table",
    "FlowGrid", "PotentialKind", "SimilarityParams", "flow_aggregate",
    "iou_potential", "joint_potential", "oks_potential",
    "optical_flow_potential", "pckh_potential", "person_potential",
    "BeliefMap", "NoiseConfig", "OcclusionWindow", "ScenarioConfig",
    "SequenceAnnotation", "corrupt_detections", "generate_sequence",
    "nms_detect", "oracle_optical_flow", "oracle_tff", "render_beliefmaps",
    "__version__",
]
