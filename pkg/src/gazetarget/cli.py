"""Command-line entry point: ``gazetarget {select,evaluate,simulate,density}``.

Exit codes: 0 success, 1 input or validation error, 2 heatmap without a hot region.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from ._io import atomic_write_text
from .config import RunConfig, dump_config, load_config
from .dataset import load_records
from .exceptions import GazeTargetError, NoRegionError
from .fusion import load_detection_set, load_detection_sets, select_gazed_object
from .heatmap import read_ghm, write_ghm, write_pgm
from .metrics import density_map
from .pipeline import evaluate_bundles
from .simulator import DISTRACTOR_LABEL, persist_simulation

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NO_REGION = 2


class CliError(GazeTargetError):
    pass


def _config_with_tau(args) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "tau", None) is not None:
        cfg = replace(cfg, metrics=replace(cfg.metrics, tau=args.tau))
    return cfg


def cmd_select(args) -> int:
    cfg = _config_with_tau(args)
    heatmap = read_ghm(args.heatmap)
    dets = load_detection_set(args.detections)
    sel = select_gazed_object(
        heatmap, dets, tau=cfg.metrics.tau, overlap_rule=cfg.overlap_rule, centroid=cfg.metrics.centroid
    )
    text = json.dumps(sel.to_dict(), sort_keys=True) + "\n"
    if args.out:
        atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _collect_bundles(records, data_dir: Path):
    det_path = data_dir / "detections.jsonl"
    dets = {d.frame_id: d for d in load_detection_sets(det_path)} if det_path.exists() else {}
    bundles, missing = [], []
    for rec in records:
        heat_path = data_dir / "heatmaps" / f"{rec.frame_id}.ghm"
        if rec.frame_id not in dets or not heat_path.exists():
            missing.append(rec.frame_id)
            continue
        bundles.append((heat_path, dets[rec.frame_id], rec))
    if missing:
        raise CliError(f"missing heatmap/detections for {len(missing)} frame(s): {', '.join(sorted(missing))}")
    return bundles


def cmd_evaluate(args) -> int:
    cfg = _config_with_tau(args)
    records = load_records(args.annotations)
    if not records:
        raise CliError(f"{args.annotations}: no frames")
    data_dir = Path(args.data_dir)
    bundles = _collect_bundles(records, data_dir)
    report = evaluate_bundles(bundles, cfg.metrics, cfg.overlap_rule, jobs=args.jobs)
    out_dir = Path(args.out) if args.out else data_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_dir / "report.json", report.to_json())
    atomic_write_text(out_dir / "per_object.csv", report.per_object_csv())
    atomic_write_text(out_dir / "per_session.csv", report.per_session_csv())
    print(f"evaluated {report.frame_count} frames; accuracy {report.accuracy_overall:.4f}; "
          f"report in {out_dir / 'report.json'}", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if cfg.metrics.distractor_label is None:
        cfg = replace(cfg, metrics=replace(cfg.metrics, distractor_label=DISTRACTOR_LABEL))
    out_dir = persist_simulation(cfg.sim, args.n_frames, args.out)
    # the saved config reproduces the run and feeds `evaluate --config`
    atomic_write_text(out_dir / "simulation.cfg", dump_config(cfg))
    print(f"wrote {args.n_frames} frames to {out_dir}", file=sys.stderr)
    return EXIT_OK


def _parse_grid(text: str) -> tuple[int, int]:
    try:
        if "x" in text:
            w, h = text.lower().split("x", 1)
            return int(w), int(h)
        return int(text), int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must be N or WxH, got {text!r}") from None


def cmd_density(args) -> int:
    records = load_records(args.annotations)
    if args.session is not None:
        records = [r for r in records if r.session == args.session]
    if args.participant is not None:
        records = [r for r in records if r.participant == args.participant]
    if not records:
        raise CliError("no frames left after filtering")
    grid_w, grid_h = args.grid
    dens = density_map([r.gaze_point_normalized for r in records], grid_w, grid_h)
    out = Path(args.out)
    write_pgm(dens, out)
    write_ghm(dens, out.with_suffix(".ghm"))
    print(f"density of {len(records)} frames written to {out} and {out.with_suffix('.ghm')}", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gazetarget", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("select", help="pick the gazed object for one frame")
    p.add_argument("heatmap", help="GHM1 heatmap file")
    p.add_argument("detections", help="JSON detection record for the same frame")
    p.add_argument("--tau", type=float, default=None, help="hot-region threshold as a fraction of the peak")
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None, help="write the selection here instead of stdout")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("evaluate", help="score a dataset and write report.json plus CSV breakdowns")
    p.add_argument("annotations", help="JSON Lines frame annotations")
    p.add_argument("data_dir", help="directory with detections.jsonl and heatmaps/<frame_id>.ghm")
    p.add_argument("--config", default=None)
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default=None, help="report directory (default: data_dir)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="write a synthetic dataset")
    p.add_argument("n_frames", type=int)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("density", help="gaze-target density map as PGM and GHM1")
    p.add_argument("annotations")
    p.add_argument("--grid", type=_parse_grid, default=(64, 64), help="N or WxH cells (default 64)")
    p.add_argument("--session", type=int, default=None)
    p.add_argument("--participant", default=None)
    p.add_argument("--out", required=True, help="PGM path; the GHM1 copy goes next to it")
    p.set_defaults(func=cmd_density)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "jobs", 1) < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except NoRegionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_REGION
    except (GazeTargetError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
