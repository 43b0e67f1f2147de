"""Single command-line entry point wiring all modules together.

Exit codes: 0 success, 1 usage error, 2 data/validation error. Results go
to stdout, diagnostics to stderr. Option precedence is flag > --config
file > built-in default, and every JSON result embeds the effective
configuration so runs are self-describing.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io, losses, metrics, report as report_mod, synth, tracker
from .errors import DataError
from .selfcheck import run_selfcheck

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit(2); we want exit 1
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="scopetrack", description=__doc__)
    parser.add_argument("--threads", type=int, default=1,
                        help="worker threads for multi-video batches (reserved)")
    parser.add_argument("--quiet", action="store_true", help="suppress notes on stderr")
    parser.add_argument("--config", type=str, default=None,
                        help="JSON file with default option values")
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("track", help="associate query slots across frames")
    p.add_argument("--in", dest="stream", required=True)
    p.add_argument("--out", dest="out", required=True)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--no-carry-forward", action="store_true")
    p.add_argument("--similarity-floor", type=float, default=None)
    p.add_argument("--baseline-iou", action="store_true",
                   help="use the IoU-overlap baseline instead of query matching")
    p.add_argument("--iou-floor", type=float, default=None)

    p = sub.add_parser("eval-det", help="detection/segmentation/classification metrics")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--tau", type=float, default=None)

    p = sub.add_parser("eval-track", help="HOTA/MOTA/IDF1 tracking metrics")
    p.add_argument("--pred", required=True, help="tracks file written by `track`")
    p.add_argument("--gt", required=True)
    p.add_argument("--alpha", type=float, default=None)

    p = sub.add_parser("report", help="per-video exam report")
    p.add_argument("--tracks", required=True)
    p.add_argument("--stream", required=True)
    p.add_argument("--format", choices=("text", "json"), default=None)
    p.add_argument("--min-frames", type=int, default=None)

    p = sub.add_parser("synth", help="generate a synthetic scenario")
    p.add_argument("--scenario", required=True, choices=synth.SCENARIO_NAMES)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-gt", required=True)
    p.add_argument("--out-pred", required=True)

    p = sub.add_parser("loss-check", help="per-frame loss breakdown")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--weights", type=str, default=None)

    sub.add_parser("selfcheck", help="run the embedded oracle suites")
    return parser


def _load_config_file(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise DataError(f"config file not found: {p}")
    try:
        obj = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"config file {p} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise DataError(f"config file {p} must hold a JSON object")
    return obj


def _pick(flag, file_cfg: dict, key: str, default):
    """flag > config file > default."""
    if flag is not None:
        return flag
    if key in file_cfg:
        return file_cfg[key]
    return default


def _tracker_config(args, file_cfg: dict) -> tracker.TrackerConfig:
    return tracker.TrackerConfig(
        empty_threshold=float(_pick(args.tau, file_cfg, "tau", 0.5)),
        death_patience=int(_pick(args.patience, file_cfg, "patience", 5)),
        carry_forward=not args.no_carry_forward and bool(
            _pick(None, file_cfg, "carry_forward", True)
        ),
        similarity_floor=_pick(args.similarity_floor, file_cfg, "similarity_floor", None),
    )


def _weights(path: str | None, file_cfg: dict) -> losses.LossWeights:
    obj = {}
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise DataError(f"weights file not found: {p}")
        obj = json.loads(p.read_text())
    elif "weights" in file_cfg:
        obj = file_cfg["weights"]
    known = losses.LossWeights().as_dict()
    unknown = set(obj) - set(known)
    if unknown:
        raise DataError(f"unknown weight keys: {sorted(unknown)}")
    known.update(obj)
    return losses.LossWeights(**known)


def _pct(value: float) -> float:
    """Benchmark-table formatting: percent with one decimal."""
    return round(100.0 * value, 1)


def _cmd_track(args, file_cfg: dict) -> int:
    cfg = _tracker_config(args, file_cfg)
    stream = io.read_stream(args.stream)
    if args.baseline_iou:
        floor = float(_pick(args.iou_floor, file_cfg, "iou_floor", 0.1))
        output = tracker.iou_baseline_track(stream, iou_floor=floor, cfg=cfg)
    else:
        output = tracker.track_video(stream, cfg)
    io.write_tracking(output, stream, args.out)
    print(json.dumps({
        "written": str(args.out),
        "frames": len(output.frames),
        "tracks": len(output.tracks),
        "config": output.config_dict(),
    }))
    return EXIT_OK


def _cmd_eval_det(args, file_cfg: dict) -> int:
    tau = float(_pick(args.tau, file_cfg, "tau", 0.5))
    preds = io.read_stream(args.pred)
    gts = io.read_ground_truth(args.gt)
    det = metrics.eval_segmentation(preds, gts, tau=tau)
    f1 = metrics.eval_classification_f1(preds, gts, tau=tau)
    print(json.dumps({
        "metrics": {
            "Dice": _pct(det.dice), "IoU": _pct(det.iou),
            "Pre.": _pct(det.precision), "Rec.": _pct(det.recall),
            "F1": _pct(f1),
        },
        "counts": {"tp": det.tp, "fp": det.fp, "fn": det.fn},
        "config": {"tau": tau, "match_iou": 0.5},
    }))
    return EXIT_OK


def _cmd_eval_track(args, file_cfg: dict) -> int:
    alpha = float(_pick(args.alpha, file_cfg, "alpha", 0.5))
    tracking, geometry = io.read_tracking(args.pred)
    gts = io.read_ground_truth(args.gt)
    pred_seq = metrics.TrackedSequence(
        frame_indices=tuple(f.frame_index for f in tracking.frames),
        frames=tuple(
            tuple(
                metrics.TrackedDet(
                    tid,
                    geometry[(f.frame_index, slot)]["box"],
                    geometry[(f.frame_index, slot)]["mask"],
                )
                for slot, tid in f.assignments
            )
            for f in tracking.frames
        ),
    )
    gt_seq = metrics.TrackedSequence.from_ground_truth(gts)
    result = metrics.evaluate_tracking(gt_seq, pred_seq, alpha=alpha)
    print(json.dumps({
        "metrics": {
            "DetA": _pct(result.deta), "AssA": _pct(result.assa),
            "HOTA": _pct(result.hota), "MOTA": _pct(result.mota),
            "IDF1": _pct(result.idf1),
        },
        "config": {"alpha": alpha, "tracker": tracking.config_dict()},
    }))
    return EXIT_OK


def _cmd_report(args, file_cfg: dict) -> int:
    fmt = _pick(args.format, file_cfg, "format", "text")
    min_frames = int(_pick(args.min_frames, file_cfg, "min_frames", 1))
    tracking, _ = io.read_tracking(args.tracks)
    stream = io.read_stream(args.stream)
    exam = report_mod.generate_report(tracking, stream, min_frames=min_frames)
    sys.stdout.buffer.write(report_mod.render_report(exam, fmt))
    sys.stdout.buffer.flush()
    return EXIT_OK


def _cmd_synth(args, file_cfg: dict) -> int:
    seed = int(_pick(args.seed, file_cfg, "seed", 0))
    cfg = synth.scenario_config(args.scenario, seed)
    gt, pred = synth.generate(cfg)
    io.write_ground_truth(gt, args.out_gt)
    io.write_stream(pred, args.out_pred)
    print(json.dumps({
        "scenario": args.scenario,
        "out_gt": str(args.out_gt),
        "out_pred": str(args.out_pred),
        "config": cfg.as_dict(),
    }))
    return EXIT_OK


def _cmd_loss_check(args, file_cfg: dict) -> int:
    weights = _weights(args.weights, file_cfg)
    preds = io.read_stream(args.pred)
    gts = io.read_ground_truth(args.gt)
    pred_idx = tuple(f.frame_index for f in preds.frames)
    gt_idx = tuple(f.frame_index for f in gts.frames)
    if pred_idx != gt_idx:
        raise DataError(
            f"prediction frames {pred_idx[:5]} do not align with ground truth "
            f"{gt_idx[:5]}"
        )
    print(json.dumps({"config": {"weights": weights.as_dict()}}))
    for frame, gt_frame in zip(preds.frames, gts.frames):
        breakdown = losses.total_loss(frame, gt_frame, weights, preds.header)
        line = {"frame_index": frame.frame_index}
        line.update(breakdown.as_dict())
        print(json.dumps(line))
    return EXIT_OK


def _cmd_selfcheck(args, file_cfg: dict) -> int:
    ok = True
    for name, passed, detail in run_selfcheck():
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok = ok and passed
    return EXIT_OK if ok else EXIT_DATA


_COMMANDS = {
    "track": _cmd_track,
    "eval-det": _cmd_eval_det,
    "eval-track": _cmd_eval_track,
    "report": _cmd_report,
    "synth": _cmd_synth,
    "loss-check": _cmd_loss_check,
    "selfcheck": _cmd_selfcheck,
}


def run(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _UsageError("missing subcommand")
        if args.threads < 1:
            raise _UsageError(f"--threads must be >= 1, got {args.threads}")
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        file_cfg = _load_config_file(args.config)
        return _COMMANDS[args.command](args, file_cfg)
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
