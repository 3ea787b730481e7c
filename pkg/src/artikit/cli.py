"""Command-line interface: scene synthesis, pipeline stages, evaluation.

``run`` executes the whole pipeline in one process; the individual
subcommands (segment, filter, smooth, estimate) exchange JSON intermediates
so the same computation can be driven stage by stage. Both paths call the
identical stage functions in the identical order, so their outputs are
byte-for-byte equal.

Configuration precedence: command-line flag > --config file > built-in
default. The effective configuration is echoed to stderr before work
starts. Errors print a one-line machine-readable JSON object to stderr and
exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import evalkit, jsonio, pipeline, synth, trackio
from .errors import ArtikitError
from .segmenter import Segment

log = logging.getLogger(__name__)


def _config_flags(p: argparse.ArgumentParser, *groups: str) -> None:
    """Attach the stage-tuning flags shared by several subcommands."""
    if "segmenter" in groups:
        p.add_argument("--wh", type=int, default=None, help="hand-signal smoothing window")
        p.add_argument("--tau", type=float, default=None, help="hand-signal threshold")
        p.add_argument("--tmin", type=int, default=None, help="min segment length (frames)")
        p.add_argument("--tmax", type=int, default=None, help="max segment length (frames)")
    if "filter" in groups:
        p.add_argument("--sigma-static", type=float, default=None,
                       help="percentile of least-moving tracks removed")
        p.add_argument("--static-mode", choices=("image2d", "world3d"), default=None,
                       help="coordinates used for the motion score")
        p.add_argument("--sigma-reliable", type=float, default=None,
                       help="max tolerated unobserved fraction per track")
        p.add_argument("--max-depth", type=float, default=None,
                       help="max trusted depth in meters")
    if "smoother" in groups:
        p.add_argument("--lambda-vel", type=float, default=None, help="velocity penalty weight")
        p.add_argument("--lambda-jerk", type=float, default=None, help="jerk penalty weight")
    if "estimate" in groups:
        p.add_argument("--stride", type=int, default=None, help="keyframe stride (frames)")
        p.add_argument("--mode", choices=pipeline.ESTIMATOR_MODES, default=None,
                       help="trajectory estimator")
        p.add_argument("--outlier-k", type=float, default=None,
                       help="MAD multiplier of the residual outlier gate")
        p.add_argument("--theta-rot-min", type=float, default=None,
                       help="min total rotation (rad) to call a joint revolute")
        p.add_argument("--trans-min", type=float, default=None,
                       help="min total translation (m) considered real motion")
        p.add_argument("--residual-margin", type=float, default=None,
                       help="relative residual improvement required for revolute")


def _overrides(args: argparse.Namespace) -> dict:
    """Dotted-key config overrides from whatever flags the subcommand has."""
    mapping = {
        "wh": "segmenter.w_h",
        "tau": "segmenter.tau_h",
        "tmin": "segmenter.t_min",
        "tmax": "segmenter.t_max",
        "sigma_static": "filter.sigma_static",
        "static_mode": "filter.static_mode",
        "sigma_reliable": "filter.sigma_reliable",
        "outlier_k": "filter.outlier_k",
        "lambda_vel": "smoother.lambda_vel",
        "lambda_jerk": "smoother.lambda_jerk",
        "theta_rot_min": "classifier.theta_rot_min",
        "trans_min": "classifier.trans_min",
        "residual_margin": "classifier.residual_margin",
        "max_depth": "max_depth",
        "stride": "stride",
        "mode": "mode",
        "jobs": "jobs",
        "seed": "seed",
    }
    out = {}
    for attr, dotted in mapping.items():
        if hasattr(args, attr):
            out[dotted] = getattr(args, attr)
    return out


def _load_config(args: argparse.Namespace) -> pipeline.PipelineConfig:
    file_doc = None
    if getattr(args, "config", None):
        file_doc = jsonio.load_json(args.config)
        if not isinstance(file_doc, dict):
            raise ArtikitError(f"{args.config}: config must be a JSON object")
    try:
        cfg = pipeline.effective_config(file_doc, _overrides(args))
    except ValueError as e:
        raise ArtikitError(str(e)) from e
    print(f"config: {json.dumps(cfg.to_dict())}", file=sys.stderr)
    return cfg


# ---------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    doc = jsonio.load_json(args.scene)
    if not isinstance(doc, dict):
        raise ArtikitError(f"{args.scene}: scene config must be a JSON object")
    if args.seed is not None:
        doc["seed"] = args.seed
    cfg = synth.config_from_dict(doc)
    ts, gt = synth.generate(cfg)
    trackio.save_trackset(args.out_tracks, ts)
    if args.out_gt:
        synth.save_ground_truth(args.out_gt, gt)
    print(f"wrote {len(ts.tracks)} tracks over {ts.frame_count} frames to {args.out_tracks}",
          file=sys.stderr)
    return 0


def cmd_segment(args) -> int:
    cfg = _load_config(args)
    ts = trackio.load_trackset(args.tracks)
    segments = pipeline.extract_hand_segments(ts, cfg.segmenter)
    jsonio.dump_json(args.out, {"version": 1, "segments": [s.to_dict() for s in segments]})
    print(f"extracted {len(segments)} segments", file=sys.stderr)
    return 0


def _load_segments(path) -> list:
    doc = jsonio.load_json(path)
    if not isinstance(doc, dict) or "segments" not in doc:
        raise ArtikitError(f"{path}: not a segments file")
    return [Segment(int(s["start"]), int(s["end"])) for s in doc["segments"]]


def _skip_record(seg: Segment, stage: str, e: ArtikitError) -> dict:
    log.warning("segment [%d, %d] skipped at %s: %s", seg.start, seg.end, stage, e)
    return {
        "segment": seg.to_dict(),
        "stage": stage,
        "error": {"type": type(e).__name__, "message": str(e)},
    }


def cmd_filter(args) -> int:
    cfg = _load_config(args)
    ts = trackio.load_trackset(args.tracks)
    segments = _load_segments(args.segments)
    entries, skipped = [], []
    for seg in segments:
        try:
            tracks, counts = pipeline.stage_filter(ts, seg, cfg)
            entries.append((seg, tracks, counts))
        except ArtikitError as e:
            skipped.append(_skip_record(seg, "filter", e))
    pipeline.save_segment_data(args.out, "filter", entries, skipped)
    print(f"filtered {len(entries)} segments ({len(skipped)} skipped)", file=sys.stderr)
    return 0


def cmd_smooth(args) -> int:
    cfg = _load_config(args)
    entries, skipped = pipeline.load_segment_data(args.segdata)
    out = []
    for seg, tracks, counts in entries:
        try:
            out.append((seg, pipeline.stage_smooth(tracks, cfg, counts), counts))
        except ArtikitError as e:
            skipped.append(_skip_record(seg, "smooth", e))
    pipeline.save_segment_data(args.out, "smooth", out, skipped)
    print(f"smoothed {len(out)} segments ({len(skipped)} skipped)", file=sys.stderr)
    return 0


def cmd_estimate(args) -> int:
    cfg = _load_config(args)
    entries, skipped = pipeline.load_segment_data(args.segdata)
    results = []
    for seg, tracks, counts in entries:
        try:
            fitted = pipeline.stage_estimate(tracks, cfg, counts)
            results.append(pipeline.segment_record(seg, fitted, counts))
        except ArtikitError as e:
            skipped.append(_skip_record(seg, "estimate", e))
    doc = {"version": 1, "results": results, "skipped": skipped}
    pipeline.save_results(args.out, doc)
    if args.export_ply:
        paths = pipeline.export_ply(args.export_ply, doc)
        print(f"exported {len(paths)} PLY files to {args.export_ply}", file=sys.stderr)
    print(f"estimated {len(results)} joints ({len(skipped)} segments skipped)", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    preds = evalkit.load_predictions(args.pred)
    gt = synth.load_ground_truth(args.gt)
    report = evalkit.evaluate(preds, gt)
    if args.out:
        jsonio.dump_json(args.out, report.to_dict())
    print(evalkit.render_report(report))
    return 0


def cmd_run(args) -> int:
    cfg = _load_config(args)
    ts = trackio.load_trackset(args.tracks)
    doc = pipeline.run_pipeline(ts, cfg)
    pipeline.save_results(args.out, doc)
    if args.export_ply:
        paths = pipeline.export_ply(args.export_ply, doc)
        print(f"exported {len(paths)} PLY files to {args.export_ply}", file=sys.stderr)
    print(f"estimated {len(doc['results'])} joints "
          f"({len(doc['skipped'])} segments skipped)", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="artikit",
        description="Articulation estimation from hand-interaction point tracks.",
    )
    ap.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(fn=fn)
        return p

    p = add("synth", cmd_synth, "generate a synthetic recording with ground truth")
    p.add_argument("--config", dest="scene", required=True, help="scene description JSON")
    p.add_argument("--out-tracks", required=True, help="output track file")
    p.add_argument("--out-gt", default=None, help="output ground-truth file")
    p.add_argument("--seed", type=int, default=None, help="override the scene seed")

    p = add("segment", cmd_segment, "extract interaction segments from the hand signal")
    p.add_argument("--tracks", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None, help="pipeline config JSON")
    _config_flags(p, "segmenter")

    p = add("filter", cmd_filter, "lift segments to world tracks and drop static/unreliable ones")
    p.add_argument("--tracks", required=True)
    p.add_argument("--segments", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    _config_flags(p, "filter")

    p = add("smooth", cmd_smooth, "smooth world trajectories")
    p.add_argument("--segdata", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    _config_flags(p, "smoother")

    p = add("estimate", cmd_estimate, "fit trajectories and joint models")
    p.add_argument("--segdata", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--export-ply", default=None, help="directory for PLY axis/trail export")
    _config_flags(p, "estimate")

    p = add("eval", cmd_eval, "score predictions against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--out", default=None, help="report JSON (table always printed)")

    p = add("run", cmd_run, "full pipeline: tracks to joint models")
    p.add_argument("--tracks", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--jobs", type=int, default=None, help="worker threads (0 = all cores)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--export-ply", default=None)
    _config_flags(p, "segmenter", "filter", "smoother", "estimate")

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.fn(args)
    except ArtikitError as e:
        print(json.dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
