"""Command-line interface wiring the pipeline stages together.

Structured outputs are JSON (sample matrices stay CSV); report-producing
subcommands also render matplotlib figures next to their output file
unless ``--no-figures`` is passed. Failures print a machine-readable
error object to stderr and exit non-zero. Seeds are explicit flags and
are echoed into the outputs they influenced.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, dsp, figures, spotting, stats, synth
from .errors import DomainError, EmgMexError, FormatError
from .evaluation import evaluate
from .indicators import calibrate_mvc, compute_indicators
from .model import (
    ExpressionAnnotation,
    SpotParams,
    load_annotations,
    load_recording,
    save_annotations,
    save_recording,
)

INDICATOR_COLUMNS = ("expr_id", "channel", "peak", "mvc_percent", "iemg", "duration_ms", "type")


class JsonArgumentParser(argparse.ArgumentParser):
    """argparse parser whose usage errors are machine-readable JSON."""

    def error(self, message):
        _print_error("UsageError", message)
        raise SystemExit(2)


def _print_error(kind: str, message: str) -> None:
    json.dump({"error": {"type": kind, "message": message}}, sys.stderr)
    sys.stderr.write("\n")


def _write_json(path: Path, payload) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _emit(payload) -> None:
    json.dump(payload, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _data_dir(value: str | None) -> Path:
    return Path(value or os.environ.get("EMGMEX_DATA_DIR") or ".")


def _spot_params(args) -> SpotParams:
    return SpotParams(
        window_len=args.wl,
        step=args.sl,
        threshold_scale=args.k,
        min_run=args.sn,
        back_windows=args.wf,
        fwd_windows=args.wb,
    )


def _add_spot_flags(parser, multi: bool = False) -> None:
    kind = {"nargs": "+"} if multi else {}
    parser.add_argument("--wl", type=int, default=[60] if multi else 60,
                        help="window length in samples", **kind)
    parser.add_argument("--sl", type=int, default=[30] if multi else 30,
                        help="window step in samples", **kind)
    parser.add_argument("--k", type=float, default=[1.0] if multi else 1.0,
                        help="threshold scale", **kind)
    parser.add_argument("--sn", type=int, default=[5] if multi else 5,
                        help="minimum run length in windows", **kind)
    parser.add_argument("--wf", type=int, default=[2] if multi else 2,
                        help="trough search steps before the run", **kind)
    parser.add_argument("--wb", type=int, default=[6] if multi else 6,
                        help="trough search steps after the run", **kind)


def _collect_recordings(args) -> list[Path]:
    if args.recording:
        return [Path(args.recording)]
    pattern = sorted(Path(args.recording_dir).glob("*.csv"))
    if not pattern:
        raise FormatError(f"no recording CSVs found in {args.recording_dir}")
    return pattern


def cmd_synth(args) -> int:
    out_dir = _data_dir(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    shapes = ("triangular", "raised_cosine")
    annotations = []
    manifest = {
        "seed": args.seed,
        "count": args.count,
        "duration_range_s": list(args.duration_range),
        "snr_range_db": list(args.snr_range),
        "sample_rate_hz": args.fs,
        "channels": args.channels,
        "segments": [],
    }
    for i in range(args.count):
        seg_seed = int(rng.integers(0, 2**31))
        seg_rng = np.random.default_rng(seg_seed)
        duration = float(seg_rng.uniform(*args.duration_range))
        snr = float(seg_rng.uniform(*args.snr_range))
        shape = shapes[0] if seg_rng.random() < 0.3 else shapes[1]
        seg_id = f"seg-{i:03d}"
        segment = synth.single_burst_segment(
            expr_duration_s=duration,
            snr_db=snr,
            seed=seg_seed,
            shape=shape,
            sample_rate_hz=args.fs,
            recording_id=seg_id,
            n_channels=args.channels,
        )
        save_recording(segment.recording, out_dir / f"{seg_id}.csv")
        onset_s, offset_s = segment.truth[0]
        annotations.append(
            ExpressionAnnotation(
                id=f"{seg_id}-e0",
                recording_id=seg_id,
                channel_id="c1" if args.channels == 1 else "c5",
                onset_ms=onset_s * 1000.0,
                apex_ms=(onset_s + offset_s) * 500.0,
                offset_ms=offset_s * 1000.0,
                source="manual",
            )
        )
        manifest["segments"].append(
            {"id": seg_id, "seed": seg_seed, "duration_s": duration,
             "snr_db": snr, "shape": shape}
        )
    save_annotations(annotations, out_dir / "truth.json")
    _write_json(out_dir / "manifest.json", manifest)
    _emit({"out_dir": str(out_dir), "count": args.count, "seed": args.seed,
           "truth": str(out_dir / "truth.json")})
    return 0


def cmd_preprocess(args) -> int:
    recording = load_recording(args.recording)
    processed = dsp.preprocess(recording, stage=args.stage)
    save_recording(processed, Path(args.out))
    _emit({"out": args.out, "stage": args.stage, "domain": processed.domain,
           "channels": list(processed.channel_ids)})
    return 0


def cmd_calibrate(args) -> int:
    trials: dict[str, list[np.ndarray]] = {}
    for path in args.trial:
        recording = load_recording(path)
        if recording.domain == "raw":
            recording = dsp.preprocess(recording)
        elif recording.domain != "envelope":
            raise DomainError(f"trial {path} is in domain {recording.domain!r}")
        for trace in recording.channels:
            trials.setdefault(trace.channel_id, []).append(trace.samples)
    calibration = calibrate_mvc(trials)
    payload = {"mvc": dict(calibration.mvc),
               "trials": {cid: list(peaks) for cid, peaks in calibration.trials.items()}}
    _write_json(Path(args.out), payload)
    _emit({"out": args.out, "channels": sorted(calibration.mvc)})
    return 0


def cmd_indicators(args) -> int:
    recording = load_recording(args.recording)
    preprocessed = False
    if recording.domain == "raw":
        recording = dsp.preprocess(recording)
        preprocessed = True
    annotations = [
        a for a in load_annotations(args.annotations) if a.recording_id == recording.id
    ]
    if not annotations:
        raise DomainError(
            f"no annotations for recording {recording.id!r} in {args.annotations}"
        )
    if args.mvc:
        with open(args.mvc) as fh:
            mvc = {k: float(v) for k, v in json.load(fh)["mvc"].items()}
    elif recording.mvc:
        mvc = dict(recording.mvc)
    else:
        raise DomainError("no MVC values: pass --mvc or store them in the sidecar")

    rows = []
    for annotation in annotations:
        result = compute_indicators(recording, annotation, mvc, norm_mode=args.norm)
        rows.append(
            {
                "expr_id": annotation.id,
                "channel": result.channel_id,
                "peak": result.peak_amplitude,
                "mvc_percent": result.mvc_percent,
                "iemg": result.iemg,
                "duration_ms": annotation.duration_ms,
                "type": annotation.expr_type,
            }
        )
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=INDICATOR_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    written = [str(out)]
    if args.figures:
        written += [str(p) for p in figures.save_indicator_figures(rows, out.with_suffix(""))]
    _emit({"out": str(out), "rows": len(rows), "norm": args.norm,
           "preprocessed": preprocessed, "files": written})
    return 0


def cmd_spot(args) -> int:
    params = _spot_params(args)
    paths = _collect_recordings(args)
    segments = []
    last_pair = None
    for path in paths:
        recording = load_recording(path)
        if recording.domain == "raw":
            envelope_rec = dsp.preprocess(recording)
            preprocessed = True
        else:
            envelope_rec = recording
            preprocessed = False
        result = spotting.spot(envelope_rec, params, args.mode)
        last_pair = (envelope_rec, result)
        segments.append(
            {
                "id": recording.id,
                "sample_rate_hz": recording.sample_rate_hz,
                "preprocessed": preprocessed,
                "channel": result.channel_id,
                "threshold": result.threshold,
                "degenerate": result.degenerate,
                "collapsed_fallback": result.collapsed_fallback,
                "intervals": [i.to_dict() for i in result.intervals],
            }
        )
    payload = {"params": params.to_dict(), "mode": args.mode, "segments": segments}
    if args.out:
        _write_json(Path(args.out), payload)
        written = [args.out]
        if args.figures and len(paths) == 1:
            envelope_rec, result = last_pair
            fig_path = Path(args.out).with_suffix("")
            written.append(str(figures.save_envelope_plot(
                envelope_rec,
                fig_path.with_name(fig_path.name + "_envelope.png"),
                detections=result.intervals,
            )))
        _emit({"out": args.out, "segments": len(segments), "files": written})
    else:
        _emit(payload)
    return 0


def cmd_sweep(args) -> int:
    paths = sorted(Path(args.recording_dir).glob("*.csv"))
    if not paths:
        raise FormatError(f"no recording CSVs found in {args.recording_dir}")
    segments = {}
    for path in paths:
        recording = load_recording(path)
        if recording.domain == "raw":
            recording = dsp.preprocess(recording)
        segments[recording.id] = recording
    truths = _truths_by_recording(args.truth)
    grid = {
        "window_len": args.wl,
        "step": args.sl,
        "threshold_scale": args.k,
        "min_run": args.sn,
        "back_windows": args.wf,
        "fwd_windows": args.wb,
    }
    results = spotting.sweep(segments, truths, grid, mode=args.mode)
    payload = {"grid": {k: list(v) for k, v in grid.items()},
               "combinations": len(results), "results": results, "best": results[0]}
    if args.out:
        _write_json(Path(args.out), payload)
        _emit({"out": args.out, "combinations": len(results), "best": results[0]})
    else:
        _emit(payload)
    return 0


def _truths_by_recording(path: str) -> dict[str, tuple[float, float]]:
    truths: dict[str, tuple[float, float]] = {}
    for annotation in load_annotations(path):
        if annotation.recording_id in truths:
            raise DomainError(
                f"multiple truth annotations for segment {annotation.recording_id!r}; "
                "segment-level evaluation expects one expression per segment"
            )
        truths[annotation.recording_id] = (
            annotation.onset_ms / 1000.0,
            annotation.offset_ms / 1000.0,
        )
    return truths


def cmd_eval(args) -> int:
    with open(args.pred) as fh:
        detections = json.load(fh)
    segments = detections.get("segments", [])
    rates = {s["sample_rate_hz"] for s in segments}
    if args.fs:
        fs = args.fs
    elif len(rates) == 1:
        fs = rates.pop()
    elif not rates:
        raise FormatError(f"{args.pred}: no segments to evaluate")
    else:
        raise DomainError(f"segments disagree on sample rate {sorted(rates)}; pass --fs")
    preds = {
        s["id"]: [(i["onset_sample"], i["offset_sample"]) for i in s["intervals"]]
        for s in segments
    }
    truths = _truths_by_recording(args.truth)
    report = evaluate(preds, truths, sample_rate_hz=fs)
    payload = report.to_dict()
    out = Path(args.out)
    _write_json(out, payload)
    written = [str(out)]
    if args.figures:
        written += [str(p) for p in figures.save_eval_figures(report, out.with_suffix(""))]
    _emit({
        "out": str(out),
        "n_total": report.n_total,
        "n_nan": report.n_nan,
        "mean_iou": report.mean_iou,
        "p_iou_gt_half": report.p_iou_gt_half,
        "files": written,
    })
    return 0


def _read_indicator_rows(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise FormatError(f"{path}: empty indicators CSV")
    return rows


def cmd_stats(args) -> int:
    if args.stat == "ttest":
        if args.summary:
            parts = [float(x) for x in args.summary.split(",")]
            if len(parts) != 6:
                raise DomainError("--summary expects n1,m1,sd1,n2,m2,sd2")
            result = stats.ttest_from_summary(
                int(parts[0]), parts[1], parts[2], int(parts[3]), parts[4], parts[5]
            )
        else:
            rows = _read_indicator_rows(args.indicators)
            groups = {"MaE": [], "ME": []}
            for row in rows:
                groups[row["type"]].append(float(row[args.value]))
            result = stats.ttest(groups["MaE"], groups["ME"])
        _emit({**result.to_dict(), "summary": result.summary()})
    elif args.stat == "ci":
        if args.summary:
            mean, sd, n = (float(x) for x in args.summary.split(","))
            lo, hi = stats.mean_ci(mean=mean, sd=sd, n=int(n), level=args.level)
        else:
            rows = _read_indicator_rows(args.indicators)
            values = [
                float(row[args.value]) for row in rows
                if args.type in ("all", row["type"])
            ]
            lo, hi = stats.mean_ci(values, level=args.level)
        _emit({"lower": lo, "upper": hi, "level": args.level})
    elif args.stat == "chisq":
        table = [
            [float(x) for x in row.split(",")] for row in args.table.split(";")
        ]
        result = stats.chi_square(table)
        _emit({**result.to_dict(), "summary": result.summary()})
    elif args.stat == "regress":
        rows = _read_indicator_rows(args.indicators)
        x = [float(r["duration_ms"]) for r in rows]
        y = [float(r["mvc_percent"]) for r in rows]
        result = stats.linregress(x, y)
        _emit(result.to_dict())
    elif args.stat == "kmeans":
        rows = _read_indicator_rows(args.indicators)
        points = np.array(
            [[float(r["duration_ms"]), float(r["mvc_percent"])] for r in rows]
        )
        result = stats.kmeans(points, k=args.k, seed=args.seed, standardize=args.standardize)
        payload = {
            "k": args.k,
            "seed": args.seed,
            "standardize": args.standardize,
            "iterations": result.iterations,
            "wcss": result.wcss,
            "centroids": result.centroids.tolist(),
            "assignments": result.assignments.tolist(),
        }
        if args.out:
            out = Path(args.out)
            _write_json(out, payload)
            written = [str(out)]
            if args.figures:
                written.append(str(figures.save_cluster_scatter(
                    points, result.assignments, result.centroids,
                    out.with_suffix("").with_name(out.stem + "_clusters.png"),
                )))
            _emit({"out": str(out), "iterations": result.iterations, "files": written})
        else:
            _emit(payload)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(_data_dir(args.data_dir))
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> JsonArgumentParser:
    parser = JsonArgumentParser(
        prog="emgmex",
        description="EMG-based expression quantification pipeline",
    )
    parser.add_argument("--version", action="version", version=f"emgmex {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic segments with ground truth")
    p.add_argument("--out-dir", help="output directory (default: EMGMEX_DATA_DIR or .)")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--duration-range", type=float, nargs=2, default=(0.35, 0.75),
                   metavar=("LO", "HI"), help="expression duration range in seconds")
    p.add_argument("--snr-range", type=float, nargs=2, default=(18.0, 24.0),
                   metavar=("LO", "HI"), help="burst SNR range in dB")
    p.add_argument("--fs", type=int, default=1000)
    p.add_argument("--channels", type=int, choices=(1, 7), default=1)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="run the envelope pre-processing chain")
    p.add_argument("--recording", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--stage", choices=dsp.STAGES, default="env",
                   help="emit an intermediate stage instead of the envelope")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("calibrate", help="derive per-channel MVC from trial recordings")
    p.add_argument("--trial", action="append", required=True,
                   help="trial recording CSV (repeat per trial)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("indicators", help="compute per-expression indicators")
    p.add_argument("--recording", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--mvc", help="calibration JSON (default: recording sidecar)")
    p.add_argument("--out", required=True)
    p.add_argument("--norm", choices=("mvc", "minmax"), default="mvc")
    p.add_argument("--no-figures", dest="figures", action="store_false")
    p.set_defaults(func=cmd_indicators)

    p = sub.add_parser("spot", help="detect expression intervals")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--recording")
    group.add_argument("--recording-dir")
    p.add_argument("--out")
    p.add_argument("--mode", choices=("all", "tightest"), default="tightest")
    _add_spot_flags(p)
    p.add_argument("--no-figures", dest="figures", action="store_false")
    p.set_defaults(func=cmd_spot)

    p = sub.add_parser("sweep", help="grid-search detection parameters")
    p.add_argument("--recording-dir", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out")
    p.add_argument("--mode", choices=("all", "tightest"), default="tightest")
    _add_spot_flags(p, multi=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="score detections against annotations")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fs", type=float, help="sample rate override")
    p.add_argument("--no-figures", dest="figures", action="store_false")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="statistical battery")
    stats_sub = p.add_subparsers(dest="stat", required=True)

    q = stats_sub.add_parser("ttest", help="pooled two-sample t-test")
    q.add_argument("--summary", help="n1,m1,sd1,n2,m2,sd2")
    q.add_argument("--indicators", help="indicators CSV grouped by type")
    q.add_argument("--value", choices=("mvc_percent", "iemg", "duration_ms"),
                   default="mvc_percent")
    q.set_defaults(func=cmd_stats)

    q = stats_sub.add_parser("ci", help="confidence interval for a mean")
    q.add_argument("--summary", help="mean,sd,n")
    q.add_argument("--indicators")
    q.add_argument("--value", choices=("mvc_percent", "iemg", "duration_ms"),
                   default="mvc_percent")
    q.add_argument("--type", choices=("ME", "MaE", "all"), default="ME")
    q.add_argument("--level", type=float, default=0.95)
    q.set_defaults(func=cmd_stats)

    q = stats_sub.add_parser("chisq", help="chi-square independence test")
    q.add_argument("--table", required=True, help="rows separated by ';', counts by ','")
    q.set_defaults(func=cmd_stats)

    q = stats_sub.add_parser("regress", help="regress intensity on duration")
    q.add_argument("--indicators", required=True)
    q.set_defaults(func=cmd_stats)

    q = stats_sub.add_parser("kmeans", help="cluster (duration, intensity) points")
    q.add_argument("--indicators", required=True)
    q.add_argument("--k", type=int, default=2)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--standardize", action=argparse.BooleanOptionalAction, default=True)
    q.add_argument("--out")
    q.add_argument("--no-figures", dest="figures", action="store_false")
    q.set_defaults(func=cmd_stats)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--data-dir", help="recordings directory (default: EMGMEX_DATA_DIR or .)")
    p.set_defaults(func=cmd_serve)

    # every subcommand answers --version, not just the root parser
    for command in sub.choices.values():
        command.add_argument(
            "--version", action="version", version=f"emgmex {__version__}"
        )
    for command in stats_sub.choices.values():
        command.add_argument(
            "--version", action="version", version=f"emgmex {__version__}"
        )

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except EmgMexError as exc:
        _print_error(type(exc).__name__, str(exc))
        return 1
    except FileNotFoundError as exc:
        _print_error("FileNotFoundError", str(exc))
        return 1


def main() -> None:
    raise SystemExit(run())


if __name__ == "__main__":
    main()
