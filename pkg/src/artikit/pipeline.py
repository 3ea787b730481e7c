"""End-to-end articulation estimation: segments to joint models.

The pipeline runs four stages per interaction segment:

1. filter: slice the recording, lift tracks to world coordinates, drop
   static background and unreliable tracks;
2. smooth: denoise each surviving track's world trajectory (observation
   masks survive untouched);
3. estimate: build keyframe correspondences, reject registration outliers
   against an independent per-step fit, then fit the configured trajectory
   model and classify the joint;
4. package: report the axis, twist and pose trail in world coordinates.

Segments fail independently: any pipeline error (degenerate geometry, too
little motion, too few tracks) is recorded under "skipped" with its stage
and message, and the remaining segments still run. Worker threads process
segments concurrently; aggregation is index-ordered, so output never
depends on scheduling.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import jsonio
from .artmodel import ArticulationEstimate, ClassifierConfig, build_articulation_estimate
from .errors import ArtikitError, IllPosedError, InsufficientTracksError, TrackFileError
from .lie import RigidTransform, Twist, transform_twist
from .segmenter import Segment, SegmenterConfig, extract_segments, moving_average
from .smoother import SmootherConfig, smooth_track
from .trackfilter import FilterConfig, filter_outliers, filter_static, filter_unreliable
from .trackio import (
    DEFAULT_MAX_DEPTH,
    SegmentTrack,
    Track3D,
    TrackSet,
    lift_track,
    to_world,
)
from .trajest import (
    DEFAULT_STRIDE,
    TrajectoryEstimate,
    build_correspondences,
    choose_anchor,
    fit_independent,
    fit_regularized,
)

log = logging.getLogger(__name__)

ESTIMATOR_MODES = ("regularized", "independent")


@dataclass
class PipelineConfig:
    segmenter: SegmenterConfig = field(default_factory=SegmenterConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    smoother: SmootherConfig = field(default_factory=SmootherConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    stride: int = DEFAULT_STRIDE
    mode: str = "regularized"
    max_depth: float = DEFAULT_MAX_DEPTH
    jobs: int = 0  # 0 = one worker per logical core
    seed: int = 0  # consumed by scene generation; estimation is seed-free

    def __post_init__(self):
        if self.mode not in ESTIMATOR_MODES:
            raise ValueError(f"mode must be one of {ESTIMATOR_MODES}, got {self.mode!r}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if self.max_depth <= 0:
            raise ValueError(f"max_depth must be > 0, got {self.max_depth}")
        if self.jobs < 0:
            raise ValueError(f"jobs must be >= 0, got {self.jobs}")

    def to_dict(self) -> dict:
        return {
            "segmenter": {
                "w_h": self.segmenter.w_h,
                "tau_h": self.segmenter.tau_h,
                "t_min": self.segmenter.t_min,
                "t_max": self.segmenter.t_max,
            },
            "filter": {
                "sigma_static": self.filter.sigma_static,
                "static_mode": self.filter.static_mode,
                "sigma_reliable": self.filter.sigma_reliable,
                "outlier_k": self.filter.outlier_k,
            },
            "smoother": {
                "lambda_vel": self.smoother.lambda_vel,
                "lambda_jerk": self.smoother.lambda_jerk,
            },
            "classifier": {
                "theta_rot_min": self.classifier.theta_rot_min,
                "trans_min": self.classifier.trans_min,
                "residual_margin": self.classifier.residual_margin,
            },
            "stride": self.stride,
            "mode": self.mode,
            "max_depth": self.max_depth,
            "jobs": self.jobs,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        """Build a config from a (possibly partial) nested dictionary.

        Unknown keys are rejected: a silently ignored typo in a config file
        would change results without a trace.
        """
        sections = {
            "segmenter": SegmenterConfig,
            "filter": FilterConfig,
            "smoother": SmootherConfig,
            "classifier": ClassifierConfig,
        }
        scalars = ("stride", "mode", "max_depth", "jobs", "seed")
        kwargs = {}
        for key, val in doc.items():
            if key in sections:
                if not isinstance(val, dict):
                    raise ValueError(f"config section {key!r} must be an object")
                kwargs[key] = sections[key](**val)
            elif key in scalars:
                kwargs[key] = val
            else:
                raise ValueError(f"unknown config key {key!r}")
        return cls(**kwargs)


def effective_config(file_doc: dict | None, overrides: dict) -> PipelineConfig:
    """Defaults, overlaid by a config file, overlaid by explicit flags.

    ``overrides`` uses dotted keys ("filter.sigma_static", "stride"); None
    values mean "not given on the command line" and are skipped.
    """
    doc = {}
    if file_doc:
        for k, v in file_doc.items():
            doc[k] = dict(v) if isinstance(v, dict) else v
    for dotted, val in overrides.items():
        if val is None:
            continue
        if "." in dotted:
            section, leaf = dotted.split(".", 1)
            doc.setdefault(section, {})[leaf] = val
        else:
            doc[dotted] = val
    try:
        return PipelineConfig.from_dict(doc)
    except (TypeError, ValueError) as e:
        raise ValueError(f"bad configuration: {e}") from e


# ---------------------------------------------------------------------------
# stages


def extract_hand_segments(ts: TrackSet, cfg: SegmenterConfig) -> list:
    smoothed = moving_average(np.asarray(ts.hand, dtype=float), cfg.w_h)
    return extract_segments(smoothed, cfg)


def stage_filter(ts: TrackSet, seg: Segment, cfg: PipelineConfig) -> tuple[list, dict]:
    """Lift one segment to world tracks and drop static or unreliable ones."""
    sub = ts.slice(seg.start, seg.end)
    stracks = []
    for tr in sub.tracks:
        lifted = lift_track(tr, sub.intrinsics, cfg.max_depth)
        world = to_world(lifted, sub.cam_poses)
        stracks.append(SegmentTrack(tr.id, tr.uv, world.positions, world.valid))
    if not stracks:
        raise InsufficientTracksError("segment has no tracks")
    kept, removed_static = filter_static(stracks, cfg.filter)
    kept, removed_unrel = filter_unreliable(kept, cfg.filter)
    counts = {"static": len(removed_static), "unreliable": len(removed_unrel)}
    if not kept:
        raise InsufficientTracksError(
            f"all {len(stracks)} tracks removed by static/reliability filtering"
        )
    log.info(
        "segment [%d, %d]: %d tracks, removed %d static, %d unreliable",
        seg.start, seg.end, len(stracks), counts["static"], counts["unreliable"],
    )
    return kept, counts


def stage_smooth(tracks: list, cfg: PipelineConfig, counts: dict) -> list:
    """Smooth world positions per track; observation masks pass through.

    A track whose trajectory cannot be smoothed (no observations, singular
    system) is dropped and counted, not fatal; the segment fails only when
    nothing survives.
    """
    out = []
    dropped = 0
    for tr in tracks:
        try:
            sm = smooth_track(Track3D(tr.world, tr.valid), cfg.smoother)
        except IllPosedError:
            dropped += 1
            continue
        out.append(SegmentTrack(tr.id, tr.uv, sm.positions, tr.valid))
    counts["unsmoothable"] = dropped
    if not out:
        raise IllPosedError("no track in the segment could be smoothed")
    return out


def stage_estimate(tracks: list, cfg: PipelineConfig, counts: dict) -> dict:
    """Fit the trajectory and joint model for one segment's tracks.

    Always scores tracks against the independent per-step fit first and
    drops residual outliers before the configured estimator runs.
    """
    corr = build_correspondences(tracks, cfg.stride)
    baseline = fit_independent(corr)
    kept, removed = filter_outliers(tracks, baseline.per_track_residuals, cfg.filter)
    counts["outliers"] = len(removed)
    if removed:
        corr = build_correspondences(kept, cfg.stride)
    anchor_points, anchor_frame, fell_back = choose_anchor(kept)
    fit = fit_regularized if cfg.mode == "regularized" else fit_independent
    traj = fit(corr, anchor_points)
    estimate = build_articulation_estimate(traj, cfg.classifier)
    return {
        "corr": corr,
        "traj": traj,
        "estimate": estimate,
        "anchor_frame": anchor_frame,
        "anchored_late": fell_back,
    }


def _to_world_frame(traj: TrajectoryEstimate, est: ArticulationEstimate):
    """Axis and twist from the anchor frame into world coordinates.

    The anchor carries no rotation, so directions are unchanged and axis
    points shift by the anchor translation; the twist maps through the
    adjoint.
    """
    axis_dir = est.axis_dir
    axis_point = None if est.axis_point is None else est.axis_point + traj.anchor.t
    twist = transform_twist(traj.anchor, est.twist)
    return axis_dir, axis_point, twist


def process_segment(ts: TrackSet, seg: Segment, cfg: PipelineConfig) -> dict:
    """Run one segment start to finish; returns a result or skip record."""
    counts = {}
    stage = "filter"
    try:
        tracks, counts = stage_filter(ts, seg, cfg)
        stage = "smooth"
        tracks = stage_smooth(tracks, cfg, counts)
        stage = "estimate"
        fitted = stage_estimate(tracks, cfg, counts)
    except ArtikitError as e:
        log.warning("segment [%d, %d] skipped at %s: %s", seg.start, seg.end, stage, e)
        return {
            "segment": seg.to_dict(),
            "stage": stage,
            "error": {"type": type(e).__name__, "message": str(e)},
        }
    return segment_record(seg, fitted, counts)


def segment_record(seg: Segment, fitted: dict, counts: dict) -> dict:
    traj: TrajectoryEstimate = fitted["traj"]
    est: ArticulationEstimate = fitted["estimate"]
    axis_dir, axis_point, twist = _to_world_frame(traj, est)
    flags = list(est.flags)
    if fitted["anchored_late"]:
        flags.append("anchored_late")
    return {
        "segment": seg.to_dict(),
        "type": est.joint_type,
        "axis_dir": [float(x) for x in axis_dir],
        "axis_point": None if axis_point is None else [float(x) for x in axis_point],
        "twist": twist.to_dict(),
        "thetas": [float(x) for x in est.thetas],
        "rms": float(est.pose_rms),
        "flags": flags,
        "filter_counts": counts,
        "trajectory": {
            "mode": traj.mode,
            "stride": int(fitted["corr"].stride),
            "keyframes": [int(k) for k in fitted["corr"].keyframes],
            "rms_residual": float(traj.rms_residual),
            "converged": bool(traj.converged),
            "anchor": traj.anchor.to_dict(),
            "anchor_frame": int(fitted["anchor_frame"]),
            "world_poses": [p.to_dict() for p in traj.world_poses],
        },
    }


def run_pipeline(ts: TrackSet, cfg: PipelineConfig) -> dict:
    """All segments of a recording; returns the results document."""
    segments = extract_hand_segments(ts, cfg.segmenter)
    log.info("extracted %d interaction segments", len(segments))
    if not segments:
        return {"version": 1, "results": [], "skipped": []}
    jobs = cfg.jobs if cfg.jobs > 0 else (os.cpu_count() or 1)
    if jobs == 1 or len(segments) == 1:
        records = [process_segment(ts, seg, cfg) for seg in segments]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(lambda s: process_segment(ts, s, cfg), segments))
    results = [r for r in records if "error" not in r]
    skipped = [r for r in records if "error" in r]
    return {"version": 1, "results": results, "skipped": skipped}


def save_results(path, doc: dict) -> None:
    jsonio.dump_json(path, doc)


# ---------------------------------------------------------------------------
# segment-stage intermediate files (the stage-by-stage CLI path)


def _track_to_dict(tr: SegmentTrack) -> dict:
    return {
        "id": int(tr.id),
        "uv": [[float(u), float(v)] for u, v in tr.uv],
        "world": jsonio.points_or_null(tr.world),
        "valid": [bool(b) for b in tr.valid],
    }


def _track_from_dict(d: dict) -> SegmentTrack:
    uv = np.asarray(d["uv"], dtype=float)
    world = np.array(
        [[np.nan] * 3 if row is None else row for row in d["world"]], dtype=float
    )
    valid = np.asarray(d["valid"], dtype=bool)
    return SegmentTrack(int(d["id"]), uv, world, valid)


def save_segment_data(path, stage: str, entries: list, skipped: list) -> None:
    """Write the per-segment working set produced by filter or smooth.

    ``entries`` holds (segment, tracks, counts) triples.
    """
    doc = {
        "version": 1,
        "stage": stage,
        "segments": [
            {
                "segment": seg.to_dict(),
                "filter_counts": counts,
                "tracks": [_track_to_dict(tr) for tr in tracks],
            }
            for seg, tracks, counts in entries
        ],
        "skipped": skipped,
    }
    jsonio.dump_json(path, doc)


def load_segment_data(path) -> tuple[list, list]:
    """Read back (segment, tracks, counts) triples plus skip records."""
    doc = jsonio.load_json(path)
    if not isinstance(doc, dict) or doc.get("version") != 1 or "segments" not in doc:
        raise TrackFileError(f"{path}: not a segment-data file")
    entries = []
    try:
        for s in doc["segments"]:
            seg = Segment(int(s["segment"]["start"]), int(s["segment"]["end"]))
            tracks = [_track_from_dict(t) for t in s["tracks"]]
            entries.append((seg, tracks, dict(s.get("filter_counts", {}))))
    except (KeyError, TypeError, ValueError) as e:
        raise TrackFileError(f"{path}: bad segment data: {e}") from e
    return entries, list(doc.get("skipped", []))


# ---------------------------------------------------------------------------
# PLY export


def export_ply(out_dir, doc: dict) -> list:
    """One ASCII PLY per estimated segment: axis line plus pose trail.

    The axis line spans 1 m each way around its reference point (for a
    prismatic joint, around the trail's first position). Returns the paths
    written.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for rec in doc.get("results", []):
        seg = rec["segment"]
        trail = [p["t"] for p in rec["trajectory"]["world_poses"]]
        a = np.asarray(rec["axis_dir"], dtype=float)
        base = (
            np.asarray(trail[0], dtype=float)
            if rec["axis_point"] is None
            else np.asarray(rec["axis_point"], dtype=float)
        )
        verts = [base - a, base + a] + [np.asarray(t, dtype=float) for t in trail]
        lines = [
            "ply",
            "format ascii 1.0",
            f"comment joint axis and pose trail for frames {seg['start']}..{seg['end']}",
            f"comment joint type {rec['type']}",
            f"element vertex {len(verts)}",
            "property float x",
            "property float y",
            "property float z",
            "element edge 1",
            "property int vertex1",
            "property int vertex2",
            "end_header",
        ]
        lines += [f"{float(v[0])!r} {float(v[1])!r} {float(v[2])!r}" for v in verts]
        lines.append("0 1")
        path = out_dir / f"segment_{seg['start']:05d}_{seg['end']:05d}.ply"
        path.write_text("\n".join(lines) + "\n")
        paths.append(path)
    return paths
