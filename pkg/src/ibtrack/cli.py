"""Command line entry point: ``ibtrack {track,eval,simulate,detect-eval,bench}``.

Exit codes: 0 success, 2 unreadable or malformed input, 3 bad config,
4 ground truth and hypothesis cover different frame ranges.
"""
from __future__ import annotations

import argparse
import json
import platform
import statistics
import sys
import time
from pathlib import Path

from . import __version__
from .config import ConfigError
from .formats import (CLASS_NAMES, DuplicateIdentity, MalformedLine, load_detections,
                      load_ground_truth, load_tracks, write_tracks)
from .metrics import (FrameRangeMismatch, evaluate, format_csv, format_table, fps,
                      mean_average_precision)
from .simulator import load_scene_config, write_scene
from .trackers import TrackerConfig, load_config, run_tracker

EXIT_OK, EXIT_PARSE, EXIT_CONFIG, EXIT_MISMATCH = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _read_inputs(loader, *paths):
    try:
        return loader(*paths)
    except (MalformedLine, DuplicateIdentity) as err:
        raise CliError(EXIT_PARSE, f"parse error: {err}") from None
    except (OSError, UnicodeDecodeError) as err:
        raise CliError(EXIT_PARSE, f"cannot read input: {err}") from None


def _tracker_config(path) -> TrackerConfig:
    if path is None:
        return TrackerConfig()
    try:
        return load_config(Path(path).read_text(encoding="utf-8"))
    except OSError as err:
        raise CliError(EXIT_CONFIG, f"cannot read config: {err}") from None
    except ConfigError as err:
        raise CliError(EXIT_CONFIG, f"config error: {err}") from None


def _manifest(path: Path, command: str, args, config: dict | None, seed=None, **stats):
    doc = {
        "command": command,
        "argv": sys.argv[1:],
        "inputs": {k: str(v) for k, v in vars(args).items()
                   if k in ("dets", "gt", "tracks", "config") and v is not None},
        "config": config,
        "seed": seed,
        "version": __version__,
        "python": platform.python_version(),
        "wall_clock": stats,
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n", encoding="utf-8")


def _config_dict(cfg) -> dict:
    return {line.split(" = ")[0]: line.split(" = ", 1)[1] for line in cfg.to_lines()}


def cmd_track(args) -> int:
    t0 = time.perf_counter()
    cfg = _tracker_config(args.config)
    dets = _read_inputs(load_detections, args.dets)
    records = run_tracker(args.tracker, dets, cfg, n_frames=args.frames)
    header = [f"tracker = {args.tracker}", *cfg.to_lines()]
    out = Path(args.out)
    out.write_text(write_tracks(records, header), encoding="ascii", newline="\n")
    _manifest(out.with_name(out.name + ".manifest.json"), "track", args, _config_dict(cfg),
              seconds=time.perf_counter() - t0, records=len(records))
    print(f"wrote {len(records)} records to {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    t0 = time.perf_counter()
    gt = _read_inputs(load_ground_truth, *args.gt)
    hyp = _read_inputs(load_tracks, args.tracks)
    try:
        rows = evaluate(gt, hyp, match_iou=args.match_iou, include_inferred=args.include_inferred,
                        mota_id=args.mota_id)
    except FrameRangeMismatch as err:
        raise CliError(EXIT_MISMATCH, f"frame range mismatch: {err}") from None
    print(format_table(rows), end="")
    out = Path(args.out) if args.out else Path(args.tracks).with_suffix(".eval.csv")
    out.write_text(format_csv(rows), encoding="ascii", newline="\n")
    _manifest(out.with_name(out.name + ".manifest.json"), "eval", args,
              {"match_iou": args.match_iou, "include_inferred": args.include_inferred,
               "mota_id": args.mota_id}, seconds=time.perf_counter() - t0)
    return EXIT_OK


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    text = ""
    if args.config is not None:
        try:
            text = Path(args.config).read_text(encoding="utf-8")
        except OSError as err:
            raise CliError(EXIT_CONFIG, f"cannot read config: {err}") from None
    try:
        cfg = load_scene_config(text, seed=args.seed)
    except ConfigError as err:
        raise CliError(EXIT_CONFIG, f"config error: {err}") from None
    gt_path, det_path = write_scene(cfg, args.out)
    _manifest(Path(args.out) / "manifest.json", "simulate", args, cfg.manifest(), seed=cfg.seed,
              seconds=time.perf_counter() - t0)
    print(f"wrote {gt_path} and {det_path}")
    return EXIT_OK


def cmd_detect_eval(args) -> int:
    gt = _read_inputs(load_ground_truth, *args.gt)
    dets = _read_inputs(load_detections, args.dets)
    rep = mean_average_precision(dets, gt, iou_threshold=0.5)
    lines = [f"{'Class':<16}{'AP@0.5':>9}"]
    for cls, ap in rep.ap.items():
        lines.append(f"{CLASS_NAMES[cls]:<16}{100 * ap:>8.1f}%")
    for cls in rep.skipped:
        lines.append(f"{CLASS_NAMES[cls]:<16}{'n/a':>9}  (no ground truth, skipped)")
    lines.append(f"{'mAP@0.5':<16}{100 * rep.map50:>8.1f}%")
    report = "\n".join(lines) + "\n"
    print(report, end="")
    if args.out:
        out = Path(args.out)
        csv = "class,ap50\n" + "".join(f"{c},{ap!r}\n" for c, ap in rep.ap.items()) + f"all,{rep.map50!r}\n"
        out.write_text(csv, encoding="ascii", newline="\n")
        _manifest(out.with_name(out.name + ".manifest.json"), "detect-eval", args, None)
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = _tracker_config(args.config)
    dets = _read_inputs(load_detections, args.dets)
    if args.repeats < 1:
        raise CliError(EXIT_CONFIG, "--repeats must be >= 1")
    runs = []
    all_times: list[float] = []
    for _ in range(args.repeats):
        times: list[float] = []
        run_tracker(args.tracker, dets, cfg, step_times=times)
        all_times += times
        runs.append({"frames": len(times), "total_s": sum(times),
                     "fps": fps(times) if times else 0.0})
    for k, r in enumerate(runs, 1):
        print(f"run {k}: {r['frames']} frames, {r['total_s']:.4f} s in tracker steps, FPS {r['fps']:.1f}")
    if all_times:
        ms = sorted(t * 1e3 for t in all_times)
        p95 = ms[min(len(ms) - 1, int(round(0.95 * (len(ms) - 1))))]
        print(f"step time ms: mean {statistics.fmean(ms):.3f}  median {statistics.median(ms):.3f}  "
              f"p95 {p95:.3f}  max {ms[-1]:.3f}")
        print(f"mean FPS over {len(runs)} run(s): {statistics.fmean(r['fps'] for r in runs):.1f}")
    if args.out:
        out = Path(args.out)
        out.write_text(json.dumps({"runs": runs}, indent=2) + "\n", encoding="utf-8")
        _manifest(out.with_name(out.name + ".manifest.json"), "bench", args, _config_dict(cfg),
                  runs=runs)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ibtrack", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    tr = sub.add_parser("track", help="run a tracker over a detection file")
    tr.add_argument("--tracker", choices=("ibta", "sort", "cta"), default="ibta")
    tr.add_argument("--dets", required=True)
    tr.add_argument("--config")
    tr.add_argument("--out", required=True)
    tr.add_argument("--frames", type=int, help="number of frames (default: last detection frame)")
    tr.set_defaults(func=cmd_track)

    ev = sub.add_parser("eval", help="tracking metrics against ground truth")
    ev.add_argument("--gt", required=True, nargs="+",
                    help="one combined GT file or per-class files ending in _c0/_c1/_c2")
    ev.add_argument("--tracks", required=True)
    ev.add_argument("--match-iou", type=float, default=0.5)
    ev.add_argument("--mota-id", action="store_true",
                    help="use identity-level IDFN/IDFP in MOTA instead of per-frame FN/FP")
    ev.add_argument("--include-inferred", action=argparse.BooleanOptionalAction, default=True,
                    help="count inferred (status I) boxes as hypotheses")
    ev.add_argument("--exclude-inferred", dest="include_inferred", action="store_false",
                    help=argparse.SUPPRESS)
    ev.add_argument("--out", help="CSV output (default: <tracks>.eval.csv)")
    ev.set_defaults(func=cmd_eval)

    sm = sub.add_parser("simulate", help="generate a synthetic GT + detection scene")
    sm.add_argument("--config")
    sm.add_argument("--seed", type=int)
    sm.add_argument("--out", required=True, help="output directory")
    sm.set_defaults(func=cmd_simulate)

    de = sub.add_parser("detect-eval", help="per-class AP and mAP@0.5 of a detection file")
    de.add_argument("--gt", required=True, nargs="+")
    de.add_argument("--dets", required=True)
    de.add_argument("--out")
    de.set_defaults(func=cmd_detect_eval)

    be = sub.add_parser("bench", help="time tracker steps and report FPS")
    be.add_argument("--tracker", choices=("ibta", "sort", "cta"), default="ibta")
    be.add_argument("--dets", required=True)
    be.add_argument("--config")
    be.add_argument("--repeats", type=int, default=1)
    be.add_argument("--out")
    be.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as err:
        print(f"ibtrack {args.command}: {err}", file=sys.stderr)
        return err.code


if __name__ == "__main__":
    sys.exit(main())
