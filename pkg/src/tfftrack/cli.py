"""Command line interface: generate / track / eval / compare / dump-field.

Exit codes: 0 success, 1 internal error, 2 usage or input error. All
commands are deterministic for a fixed seed. TFFTRACK_THREADS caps the
worker count when a command processes a directory of sequences.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import traceback
from pathlib import Path

import yaml

from . import fieldio, seqio
from .core import FramePoses
from .matching import (MatchContext, MatchPolicy, PotentialKind,
                       prune_tracks, track_sequence)
from .metrics import evaluate_map, evaluate_mot, format_mot_table
from .similarity import SimilarityParams
from .synth import (NoiseConfig, OcclusionWindow, ScenarioConfig,
                    corrupt_detections, generate_sequence,
                    group_nms_detections, nms_detect, oracle_optical_flow,
                    oracle_tff, render_beliefmaps)

_METRICS = {kind.value: kind for kind in PotentialKind}
_COMPARE_ORDER = (("PCKh", PotentialKind.PCKH),
                  ("IoU", PotentialKind.IOU),
                  ("OKS", PotentialKind.OKS),
                  ("OpticalFlow", PotentialKind.OPTICAL_FLOW),
                  ("TFF", PotentialKind.TFF))

_SCENARIO_KEYS = {"persons", "frames", "width", "height", "motion",
                  "speed_range", "scale_range", "occlusions", "ignore_rects",
                  "seed", "noise"}
_NOISE_KEYS = {"jitter_sigma", "drop_prob", "spurious_rate",
               "field_angle_sigma", "field_dropout"}
_OCCLUSION_KEYS = {"person", "frame_start", "frame_end", "joints"}


class UsageError(Exception):
    """Bad input or arguments; reported without a traceback, exit code 2."""


def _add_param_flags(parser: argparse.ArgumentParser):
    group = parser.add_argument_group("model parameters")
    group.add_argument("--tau-delta", type=float, default=2.0,
                       help="distance below which a joint pair counts as "
                            "stationary (default: %(default)s)")
    group.add_argument("--sigma", type=float, default=1.0,
                       help="half-width of the flow field ribbon in pixels "
                            "(default: %(default)s)")
    group.add_argument("--tau-nms", type=float, default=0.2,
                       help="minimum belief map value for a detection "
                            "(default: %(default)s)")
    group.add_argument("--sigma-flow", type=float, default=30.0,
                       help="tolerance radius of the optical flow potential "
                            "(default: %(default)s)")
    group.add_argument("--min-track-length", type=int, default=7,
                       help="tracks shorter than this many frames are pruned "
                            "(default: %(default)s)")
    group.add_argument("--accept-threshold", type=float, default=0.0,
                       help="a pair is linked only if its potential exceeds "
                            "this value (default: %(default)s)")
    group.add_argument("--seed", type=int, default=None,
                       help="random seed; for generate it overrides the "
                            "scenario seed (default: %(default)s)")
    group.add_argument("--quadrature-steps", type=int, default=10,
                       help="midpoint samples for the field line integral "
                            "(default: %(default)s)")


def _params_from_args(args) -> SimilarityParams:
    return SimilarityParams(tau_delta=args.tau_delta,
                            quadrature_steps=args.quadrature_steps,
                            sigma_flow=args.sigma_flow)


def _policy_from_args(args) -> MatchPolicy:
    return MatchPolicy(accept_threshold=args.accept_threshold,
                       min_track_length=args.min_track_length)


def _worker_count(n_items: int) -> int:
    cap = os.environ.get("TFFTRACK_THREADS", "")
    try:
        limit = int(cap)
    except ValueError:
        limit = 0
    if limit < 1:
        limit = os.cpu_count() or 1
    return max(1, min(limit, n_items))


# ---------------------------------------------------------------- scenario

def _require_keys(obj: dict, allowed: set, context: str):
    unknown = set(obj) - allowed
    if unknown:
        raise UsageError(f"unknown {context} keys: {', '.join(sorted(unknown))}")


def _pair(value, context: str) -> tuple:
    if (not isinstance(value, (list, tuple)) or len(value) != 2):
        raise UsageError(f"{context} must be a [low, high] pair")
    return float(value[0]), float(value[1])


def load_scenario(path) -> tuple:
    """Parse a scenario YAML file into (ScenarioConfig, NoiseConfig)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read scenario file: {exc}")
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = (f" (line {mark.line + 1}, column {mark.column + 1})"
                 if mark is not None else "")
        raise UsageError(f"invalid scenario YAML{where}: {exc}")
    if not isinstance(raw, dict):
        raise UsageError("scenario file must contain a mapping")
    _require_keys(raw, _SCENARIO_KEYS, "scenario")
    noise_raw = raw.get("noise") or {}
    if not isinstance(noise_raw, dict):
        raise UsageError("noise must be a mapping")
    _require_keys(noise_raw, _NOISE_KEYS, "noise")
    occlusions = []
    for i, item in enumerate(raw.get("occlusions") or []):
        if not isinstance(item, dict):
            raise UsageError(f"occlusions[{i}] must be a mapping")
        _require_keys(item, _OCCLUSION_KEYS, f"occlusions[{i}]")
        try:
            occlusions.append(OcclusionWindow(
                person=int(item["person"]),
                frame_start=int(item["frame_start"]),
                frame_end=int(item["frame_end"]),
                joints=(None if item.get("joints") is None
                        else tuple(int(j) for j in item["joints"]))))
        except KeyError as exc:
            raise UsageError(f"occlusions[{i}] misses key {exc}")
    ignore_rects = tuple(tuple(float(v) for v in rect)
                         for rect in raw.get("ignore_rects") or [])
    try:
        config = ScenarioConfig(
            persons=int(raw.get("persons", 2)),
            frames=int(raw.get("frames", 30)),
            width=int(raw.get("width", 256)),
            height=int(raw.get("height", 256)),
            motion=str(raw.get("motion", "linear")),
            speed_range=(_pair(raw["speed_range"], "speed_range")
                         if "speed_range" in raw else (1.0, 4.0)),
            scale_range=(_pair(raw["scale_range"], "scale_range")
                         if "scale_range" in raw else (30.0, 60.0)),
            occlusions=tuple(occlusions),
            ignore_rects=ignore_rects,
            seed=int(raw.get("seed", 0)))
        noise = NoiseConfig(**{k: float(v) for k, v in noise_raw.items()})
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid scenario value: {exc}")
    return config, noise


# ---------------------------------------------------------------- sources

def _field_source_from_dir(dir_path: Path):
    def source(prev_frame, curr_frame):
        path = dir_path / f"fields_{curr_frame.frame_index:06d}.tff1"
        if not path.is_file():
            raise UsageError(f"missing field file {path}")
        return fieldio.read_field_stack(path)
    return source


def _flow_source_from_dir(dir_path: Path):
    def source(prev_frame, curr_frame):
        path = dir_path / f"flow_{curr_frame.frame_index:06d}.flo1"
        if not path.is_file():
            raise UsageError(f"missing flow file {path}")
        return fieldio.read_flow_grid(path)
    return source


def _oracle_field_source(gt, sigma: float, noise: NoiseConfig, seed: int):
    by_index = {f.frame_index: f for f in gt.frames}
    dims = (gt.width, gt.height)
    joint_count = gt.skeleton.joint_count

    def source(prev_frame, curr_frame):
        try:
            gp = by_index[prev_frame.frame_index]
            gc = by_index[curr_frame.frame_index]
        except KeyError as exc:
            raise UsageError(f"ground truth misses frame {exc} needed for "
                             "oracle fields")
        return oracle_tff(gp, gc, sigma, noise, dims=dims,
                          joint_count=joint_count, seed=seed)
    return source


def _oracle_flow_source(gt, radius: float):
    by_index = {f.frame_index: f for f in gt.frames}
    dims = (gt.width, gt.height)

    def source(prev_frame, curr_frame):
        try:
            gp = by_index[prev_frame.frame_index]
            gc = by_index[curr_frame.frame_index]
        except KeyError as exc:
            raise UsageError(f"ground truth misses frame {exc} needed for "
                             "oracle flow")
        return oracle_optical_flow(gp, gc, radius, dims)
    return source


def _make_source(kind: PotentialKind, args, gt):
    """Field/flow provider for one metric, or None for geometric metrics."""
    if kind is PotentialKind.TFF:
        if getattr(args, "fields", None):
            return _field_source_from_dir(Path(args.fields))
        if gt is not None:
            noise = NoiseConfig(field_angle_sigma=args.field_angle_sigma,
                                field_dropout=args.field_dropout)
            return _oracle_field_source(gt, args.sigma, noise,
                                        args.seed or 0)
        raise UsageError("metric tff needs --fields or --gt for oracle "
                         "field generation")
    if kind is PotentialKind.OPTICAL_FLOW:
        if getattr(args, "flow", None):
            return _flow_source_from_dir(Path(args.flow))
        if gt is not None:
            return _oracle_flow_source(gt, args.flow_radius)
        raise UsageError("metric flow needs --flow or --gt for oracle "
                         "flow generation")
    return None


# ---------------------------------------------------------------- commands

def cmd_generate(args) -> int:
    config, noise = load_scenario(args.scenario)
    if args.seed is not None:
        config = ScenarioConfig(
            persons=config.persons, frames=config.frames,
            width=config.width, height=config.height, motion=config.motion,
            speed_range=config.speed_range, scale_range=config.scale_range,
            occlusions=config.occlusions, ignore_rects=config.ignore_rects,
            seed=args.seed)
    try:
        gt = generate_sequence(config)
    except ValueError as exc:
        raise UsageError(str(exc))
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    seqio.write_sequence(out_dir / "gt.json", gt)
    if args.detector == "corrupt":
        detections = corrupt_detections(gt, noise, seed=config.seed)
    else:
        detections = []
        group_radius = max(2.0, 2.0 * args.peak_sigma)
        for frame in gt.frames:
            beliefs = render_beliefmaps(frame, args.peak_sigma,
                                        (gt.width, gt.height),
                                        gt.skeleton.joint_count)
            keypoints = nms_detect(beliefs, args.tau_nms)
            detections.append(group_nms_detections(frame, keypoints,
                                                   group_radius))
    seqio.write_detections(out_dir / "detections.json", detections,
                           gt.skeleton, gt.width, gt.height)
    pairs = list(zip(gt.frames[:-1], gt.frames[1:]))
    if args.dump_fields:
        fields_dir = out_dir / "fields"
        fields_dir.mkdir(exist_ok=True)
        for prev_frame, curr_frame in pairs:
            stack = oracle_tff(prev_frame, curr_frame, args.sigma, noise,
                               dims=(gt.width, gt.height),
                               joint_count=gt.skeleton.joint_count,
                               seed=config.seed)
            fieldio.write_field_stack(
                fields_dir / f"fields_{curr_frame.frame_index:06d}.tff1",
                stack)
    if args.dump_flow:
        flow_dir = out_dir / "flow"
        flow_dir.mkdir(exist_ok=True)
        for prev_frame, curr_frame in pairs:
            grid = oracle_optical_flow(prev_frame, curr_frame,
                                       args.flow_radius,
                                       (gt.width, gt.height))
            fieldio.write_flow_grid(
                flow_dir / f"flow_{curr_frame.frame_index:06d}.flo1", grid)
    print(f"wrote {out_dir / 'gt.json'} and {out_dir / 'detections.json'} "
          f"({config.persons} persons, {config.frames} frames)")
    return 0


def _track_one(detections_path: Path, out_path: Path, args, gt_path) -> str:
    detections = seqio.read_sequence(detections_path)
    gt = seqio.read_sequence(gt_path) if gt_path else None
    kind = _METRICS[args.metric]
    source = _make_source(kind, args, gt)
    context = MatchContext(params=_params_from_args(args),
                           skeleton=detections.skeleton)
    policy = _policy_from_args(args)
    try:
        tracks = track_sequence(detections.frames, kind, source,
                                policy=policy, context=context)
    except ValueError as exc:
        raise UsageError(str(exc))
    raw_count = len(tracks.tracks)
    tracks = prune_tracks(tracks, policy.min_track_length)
    seqio.write_tracks(out_path, tracks, detections.skeleton,
                       detections.width, detections.height)
    summary = (f"{detections_path.name}: {len(tracks.tracks)} tracks kept "
               f"({raw_count} before pruning)")
    if gt is not None:
        try:
            report = evaluate_mot(tracks, gt)
        except ValueError as exc:
            raise UsageError(str(exc))
        mota = 100.0 * report.total.mota
        summary += (f", identity switches {report.total.id_switches}, "
                    f"MOTA {mota:.1f}")
    return summary


def cmd_track(args) -> int:
    in_path = Path(args.detections)
    out_path = Path(args.out)
    if in_path.is_dir():
        if args.fields or args.flow:
            raise UsageError("--fields/--flow are per-sequence; with a "
                             "detections directory use --gt oracles")
        files = sorted(in_path.glob("*.json"))
        if not files:
            raise UsageError(f"no *.json detections in {in_path}")
        out_path.mkdir(parents=True, exist_ok=True)
        gt_dir = Path(args.gt) if args.gt else None
        if gt_dir is not None and not gt_dir.is_dir():
            raise UsageError("--gt must be a directory when tracking a "
                             "detections directory")
        jobs = []
        for f in files:
            gt_file = None
            if gt_dir is not None:
                gt_file = gt_dir / f.name
                if not gt_file.is_file():
                    raise UsageError(f"missing ground truth {gt_file}")
            jobs.append((f, out_path / f.name, gt_file))
        workers = _worker_count(len(jobs))
        with concurrent.futures.ThreadPoolExecutor(workers) as pool:
            summaries = list(pool.map(
                lambda job: _track_one(job[0], job[1], args, job[2]), jobs))
        for line in summaries:
            print(line)
        return 0
    if not in_path.is_file():
        raise UsageError(f"detections file {in_path} not found")
    print(_track_one(in_path, out_path, args,
                     Path(args.gt) if args.gt else None))
    return 0


def cmd_eval(args) -> int:
    tracks, _, _, _ = seqio.read_tracks(args.tracks)
    gt = seqio.read_sequence(args.gt)
    try:
        report = evaluate_mot(tracks, gt, gate=args.gate)
    except ValueError as exc:
        raise UsageError(str(exc))
    payload = {"mot": report.to_json()}
    print(format_mot_table(report))
    if args.map:
        frames_by_index = {}
        for track in tracks.tracks:
            for frame_index, pose in track.entries:
                frames_by_index.setdefault(frame_index, []).append(pose)
        pred_frames = [FramePoses(frame_index=i, poses=poses)
                       for i, poses in sorted(frames_by_index.items())]
        map_report = evaluate_map(pred_frames, gt, gate=args.gate)
        payload["map"] = map_report.to_json()
        mean_ap = map_report.mean_ap
        print(f"mAP: {100.0 * mean_ap:.1f}" if mean_ap == mean_ap
              else "mAP: -")
    if args.out_json:
        with open(args.out_json, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def cmd_compare(args) -> int:
    detections = seqio.read_sequence(args.detections)
    gt = seqio.read_sequence(args.gt)
    params = _params_from_args(args)
    # pruning would change recall per metric row; comparison keeps every
    # track so precision/recall depend on the detections alone
    policy = MatchPolicy(accept_threshold=args.accept_threshold,
                         min_track_length=1)
    rows = []
    for label, kind in _COMPARE_ORDER:
        source = _make_source(kind, args, gt)
        context = MatchContext(params=params, skeleton=detections.skeleton)
        try:
            tracks = track_sequence(detections.frames, kind, source,
                                    policy=policy, context=context)
            report = evaluate_mot(tracks, gt, gate=args.gate)
        except ValueError as exc:
            raise UsageError(str(exc))
        rows.append((label, report))
    header = f"{'Metric':<12}{'MOTA':>8}{'MOTP':>8}{'Prec':>8}{'Rec':>8}"
    lines = [header]
    for label, report in rows:
        t = report.total
        cells = "".join(
            f"{100.0 * value:>8.1f}" if value == value else f"{'-':>8}"
            for value in (t.mota, t.motp, t.precision, t.recall))
        lines.append(f"{label:<12}{cells}")
    print("\n".join(lines))
    if args.out_json:
        payload = {label: report.to_json() for label, report in rows}
        with open(args.out_json, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def cmd_dump_field(args) -> int:
    try:
        stack = fieldio.read_field_stack(args.field)
    except (OSError, ValueError) as exc:
        raise UsageError(str(exc))
    if not 0 <= args.joint < stack.joint_count:
        raise UsageError(f"--joint must lie in [0, {stack.joint_count})")
    fieldio.write_ppm(args.out, stack.fields[args.joint])
    print(f"wrote {args.out} ({stack.width}x{stack.height}, "
          f"joint {args.joint} of {stack.joint_count})")
    return 0


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tfftrack",
        description="Temporal flow field pose tracking on synthetic "
                    "sequences: generation, tracking, evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate",
                       help="render a scenario into GT and detections")
    p.add_argument("scenario", help="scenario YAML file")
    p.add_argument("--out-dir", required=True, help="output directory")
    p.add_argument("--detector", choices=("corrupt", "nms"),
                   default="corrupt",
                   help="how detections are derived from GT "
                        "(default: %(default)s)")
    p.add_argument("--peak-sigma", type=float, default=3.0,
                   help="belief map peak width for the nms detector "
                        "(default: %(default)s)")
    p.add_argument("--dump-fields", action="store_true",
                   help="also write oracle TFF1 files per frame pair")
    p.add_argument("--dump-flow", action="store_true",
                   help="also write oracle FLO1 files per frame pair")
    p.add_argument("--flow-radius", type=float, default=5.0,
                   help="splat radius of the oracle optical flow "
                        "(default: %(default)s)")
    _add_param_flags(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("track", help="associate detections into tracks")
    p.add_argument("detections", help="detections JSON file or directory")
    p.add_argument("--out", required=True,
                   help="output tracks JSON file (or directory)")
    p.add_argument("--metric", choices=sorted(_METRICS), default="tff",
                   help="association potential (default: %(default)s)")
    p.add_argument("--fields", help="directory of TFF1 field files")
    p.add_argument("--flow", help="directory of FLO1 flow files")
    p.add_argument("--gt", help="ground truth JSON used for oracle "
                                "fields/flow and the run summary")
    p.add_argument("--field-angle-sigma", type=float, default=0.0,
                   help="angular noise of oracle fields in radians "
                        "(default: %(default)s)")
    p.add_argument("--field-dropout", type=float, default=0.0,
                   help="probability of dropping an oracle field ribbon "
                        "(default: %(default)s)")
    p.add_argument("--flow-radius", type=float, default=5.0,
                   help="splat radius of the oracle optical flow "
                        "(default: %(default)s)")
    _add_param_flags(p)
    p.set_defaults(func=cmd_track)

    p = sub.add_parser("eval", help="score tracks against ground truth")
    p.add_argument("tracks", help="tracks JSON file")
    p.add_argument("gt", help="ground truth JSON file")
    p.add_argument("--gate", type=float, default=0.5,
                   help="match gate as a fraction of head size "
                        "(default: %(default)s)")
    p.add_argument("--map", action="store_true",
                   help="also compute mean average precision")
    p.add_argument("--out-json", help="write the report to this JSON file")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare",
                       help="run every metric on the same detections")
    p.add_argument("detections", help="detections JSON file")
    p.add_argument("gt", help="ground truth JSON file")
    p.add_argument("--gate", type=float, default=0.5,
                   help="match gate as a fraction of head size "
                        "(default: %(default)s)")
    p.add_argument("--fields", help="directory of TFF1 field files")
    p.add_argument("--flow", help="directory of FLO1 flow files")
    p.add_argument("--field-angle-sigma", type=float, default=0.0,
                   help="angular noise of oracle fields in radians "
                        "(default: %(default)s)")
    p.add_argument("--field-dropout", type=float, default=0.0,
                   help="probability of dropping an oracle field ribbon "
                        "(default: %(default)s)")
    p.add_argument("--flow-radius", type=float, default=5.0,
                   help="splat radius of the oracle optical flow "
                        "(default: %(default)s)")
    p.add_argument("--out-json", help="write all reports to this JSON file")
    _add_param_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("dump-field",
                       help="render a TFF1 field file to a PPM image")
    p.add_argument("field", help="TFF1 input file")
    p.add_argument("out", help="PPM output file")
    p.add_argument("--joint", type=int, default=0,
                   help="joint class channel to render (default: %(default)s)")
    p.set_defaults(func=cmd_dump_field)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
