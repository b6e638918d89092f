"""argparse front end: every pipeline stage as a subcommand.

Each run writes exactly one JSON manifest (command line, config hash, seeds,
input/output digests, wall clock) next to its primary output, or to --manifest.
Exit codes: 0 success, 2 typed input error, 3 numerical error, 64 usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .curves import (
    CurveConfig,
    EventCurve,
    extract_event_curve,
    pick_peaks,
    read_curve_csv,
    read_timeline_json,
    windowed_correlation,
    write_curve_csv,
    write_timeline_json,
)
from .errors import EvcError
from .features import FeatureSequence, read_features, write_features
from .flow import (
    FlowArch,
    SampleConfig,
    TrainConfig,
    load_model,
    rms_envelope,
    sample,
    save_model,
    swap_fidelity,
    synth_dataset,
    train,
)
from .manifest import write_manifest
from .metrics import (
    FD_MODES,
    beat_scores,
    curve_fd,
    scene_cut_hit,
    temporal_deviation,
)
from .plotting import emit_plot, save_curve_figure, save_envelope_figure

log = logging.getLogger("evc")

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


class _Run:
    """Collects manifest material while a subcommand executes."""

    def __init__(self, argv):
        self.argv = list(argv)
        self.started = time.time()
        self.params: dict = {}
        self.seeds: dict = {}
        self.inputs: list = []
        self.outputs: list = []
        self.anchor = None  # primary output; manifest lands next to it

    def finish(self, explicit_path):
        if explicit_path:
            path = explicit_path
        elif self.anchor:
            path = f"{self.anchor}.manifest.json"
        else:
            path = "evc-run.manifest.json"
        write_manifest(
            path,
            argv=self.argv,
            params=self.params,
            seeds=self.seeds,
            inputs=self.inputs,
            outputs=self.outputs,
            wall_clock_s=time.time() - self.started,
        )
        return path


def _configure_logging():
    name = os.environ.get("EVC_LOG", "error")
    level = _LOG_LEVELS.get(name)
    if level is None:
        raise UsageError(
            f"EVC_LOG must be one of {sorted(_LOG_LEVELS)}, got {name!r}"
        )
    logging.basicConfig(
        level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )


def _write_report(path, metric, value, params, items):
    doc = {"metric": metric, "value": value, "params": params, "items": items}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_curves(paths, jobs):
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        return list(pool.map(read_curve_csv, paths))


# --- features ---

def _cmd_features_info(args, run):
    seq = read_features(args.features)
    run.inputs.append(args.features)
    run.params = {"command": "features info"}
    return (
        f"features info: d_f={seq.d_f} l_f={seq.l_f} rate_hz={seq.rate_hz:g} "
        f"duration_s={seq.duration_s:g} tag={seq.source_tag!r}"
    )


def _matrix_to_csv(data, path):
    with open(path, "w") as fh:
        for row in data:
            fh.write(",".join(f"{v:.9g}" for v in row))
            fh.write("\n")


def _matrix_from_csv(path):
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)
    except ValueError as exc:
        raise UsageError(f"{path}: cannot parse as CSV matrix: {exc}") from exc
    return data


def _cmd_features_convert(args, run):
    src, dst = Path(args.infile), Path(args.outfile)
    sfx_in, sfx_out = src.suffix.lower(), dst.suffix.lower()
    for name, sfx in (("input", sfx_in), ("output", sfx_out)):
        if sfx not in (".evcf", ".csv"):
            raise UsageError(f"{name} must end in .evcf or .csv, got {sfx!r}")
    if sfx_in == ".evcf":
        seq = read_features(src)
        data, rate, tag = seq.data, seq.rate_hz, seq.source_tag
    else:
        if args.rate is None:
            raise UsageError("--rate is required when converting from CSV")
        data, rate, tag = _matrix_from_csv(src), args.rate, args.tag or ""
    if args.rate is not None:
        rate = args.rate
    if args.tag is not None:
        tag = args.tag
    if sfx_out == ".evcf":
        write_features(FeatureSequence(data=data, rate_hz=rate, source_tag=tag), dst)
    else:
        _matrix_to_csv(data, dst)
    run.inputs.append(src)
    run.outputs.append(dst)
    run.anchor = dst
    run.params = {"command": "features convert", "rate_hz": rate, "tag": tag}
    return f"features convert: {src} -> {dst} ({data.shape[0]}x{data.shape[1]})"


# --- curve ---

def _cmd_curve_extract(args, run):
    paths = args.features
    batch = len(paths) > 1
    if batch and args.figure:
        raise UsageError("--figure is only supported with a single --features file")
    cfg = CurveConfig(target_length=args.length, kernel_size=args.kernel)
    run.params = {
        "command": "curve extract",
        "length": args.length,
        "kernel": args.kernel,
        "duration_s": args.duration,
    }
    run.inputs.extend(paths)

    def work(path):
        seq = read_features(path)
        return extract_event_curve(seq, cfg, duration_s=args.duration)

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        curves = list(pool.map(work, paths))

    if batch:
        os.makedirs(args.out, exist_ok=True)
        outs = [Path(args.out) / (Path(p).stem + ".csv") for p in paths]
    else:
        outs = [Path(args.out)]
    for curve, out in zip(curves, outs):
        write_curve_csv(curve, out)
        log.info("wrote %s", out)
    run.outputs.extend(outs)
    run.anchor = args.out if not batch else None
    degenerate = sum(1 for c in curves if c.degenerate)
    if args.figure:
        stem = Path(paths[0]).stem
        save_curve_figure(curves, [stem], None, args.figure, title=stem)
        run.outputs.append(args.figure)
    return (
        f"curve extract: {len(curves)} curve(s) -> {args.out} "
        f"(degenerate: {degenerate})"
    )


def _cmd_curve_correlate(args, run):
    a = read_curve_csv(args.a)
    b = read_curve_csv(args.b)
    anchors = read_timeline_json(args.anchors)
    result = windowed_correlation(a, b, anchors, args.window)
    run.inputs.extend([args.a, args.b, args.anchors])
    run.params = {"command": "curve correlate", "window_s": args.window}
    if args.out:
        _write_report(
            args.out,
            "windowed_correlation",
            result.mean,
            {"window_s": args.window, "anchors": list(result.anchors_s)},
            list(result.values),
        )
        run.outputs.append(args.out)
        run.anchor = args.out
    if args.figure:
        save_curve_figure([a, b], [Path(args.a).stem, Path(args.b).stem], anchors, args.figure)
        run.outputs.append(args.figure)
    return (
        f"curve correlate: mean={result.mean:.6f} used={result.used} "
        f"skipped={result.skipped}"
    )


def _cmd_curve_peaks(args, run):
    curve = read_curve_csv(args.curve)
    timeline = pick_peaks(curve, args.threshold, args.min_separation)
    write_timeline_json(timeline, args.out)
    run.inputs.append(args.curve)
    run.outputs.append(args.out)
    run.anchor = args.out
    run.params = {
        "command": "curve peaks",
        "threshold": args.threshold,
        "min_separation_s": args.min_separation,
    }
    return f"curve peaks: {len(timeline)} peak(s) -> {args.out}"


# --- metrics ---

def _finish_metric(args, run, metric, value, params, items):
    if args.out:
        _write_report(args.out, metric, value, params, items)
        run.outputs.append(args.out)
        run.anchor = args.out


def _cmd_metrics_sch(args, run):
    cuts = read_timeline_json(args.cuts)
    onsets = read_timeline_json(args.onsets)
    value = scene_cut_hit(cuts, onsets, args.tolerance)
    run.inputs.extend([args.cuts, args.onsets])
    run.params = {"command": "metrics sch", "tolerance_s": args.tolerance}
    _finish_metric(args, run, "sch", value, {"tolerance_s": args.tolerance}, [])
    return f"sch={value:.6f}"


def _cmd_metrics_beat(args, run):
    motion = read_timeline_json(args.motion)
    music = read_timeline_json(args.music)
    scores = beat_scores(motion, music, args.tolerance)
    run.inputs.extend([args.motion, args.music])
    run.params = {"command": "metrics beat", "tolerance_s": args.tolerance}
    _finish_metric(
        args,
        run,
        "beat",
        scores.f1,
        {"tolerance_s": args.tolerance},
        [
            {
                "bcs": scores.bcs,
                "bhs": scores.bhs,
                "f1": scores.f1,
                "matched_count": scores.matched_count,
            }
        ],
    )
    return (
        f"bcs={scores.bcs:.6f} bhs={scores.bhs:.6f} f1={scores.f1:.6f} "
        f"matched={scores.matched_count}"
    )


def _cmd_metrics_td(args, run):
    motion = read_timeline_json(args.motion)
    music = read_timeline_json(args.music)
    value = temporal_deviation(motion, music)
    run.inputs.extend([args.motion, args.music])
    run.params = {"command": "metrics td"}
    _finish_metric(args, run, "td", value, {}, [])
    return f"td={value:.6f}"


def _cmd_metrics_fd(args, run):
    needs_ref = args.mode in ("M", "M+V", "M|V")
    needs_video = args.mode in ("M+V", "M-V", "M|V")
    if needs_ref and not args.reference:
        raise UsageError(f"--reference is required for mode {args.mode}")
    if needs_video and not args.video:
        raise UsageError(f"--video is required for mode {args.mode}")
    gen = _load_curves(args.generated, args.jobs)
    ref = _load_curves(args.reference or [], args.jobs)
    vid = _load_curves(args.video or [], args.jobs)
    result = curve_fd(gen, ref, vid, mode=args.mode)
    run.inputs.extend(args.generated)
    run.inputs.extend(args.reference or [])
    run.inputs.extend(args.video or [])
    run.params = {
        "command": "metrics fd",
        "mode": args.mode,
        "generated": len(gen),
        "reference": len(ref),
        "video": len(vid),
    }
    _finish_metric(
        args, run, f"curve_fd[{result.mode}]", result.value,
        {"mode": result.mode}, list(result.per_video),
    )
    return f"fd[{result.mode}]={result.value:.6f}"


# --- flow ---

def _cmd_flow_train(args, run):
    cfg = TrainConfig.from_json(args.config)
    arch = FlowArch(
        channels=args.channels, length=args.length, class_count=args.classes
    )
    dataset = synth_dataset(
        args.data_seed, args.data_size, d=args.channels, l=args.length,
        class_count=args.classes,
    )
    log.info("training %d steps on %d items", cfg.steps, len(dataset))
    result = train(cfg, dataset, arch=arch)
    save_model(result.model, args.out)
    run.inputs.append(args.config)
    run.outputs.append(args.out)
    run.anchor = args.out
    run.seeds = {"train": cfg.seed, "data": args.data_seed}
    run.params = {
        "command": "flow train",
        "steps": cfg.steps,
        "batch_size": cfg.batch_size,
        "learning_rate": cfg.learning_rate,
        "condition_dropout": cfg.condition_dropout,
        "data_size": args.data_size,
        "channels": args.channels,
        "length": args.length,
        "classes": args.classes,
    }
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write("step,loss\n")
            for i, v in enumerate(result.loss_trace):
                fh.write(f"{i},{float(v)!r}\n")
        run.outputs.append(args.trace)
    trace = result.loss_trace
    return (
        f"flow train: {cfg.steps} steps, loss {trace[0]:.3f} -> {trace[-1]:.3f}, "
        f"{result.model.param_count} params -> {args.out}"
    )


def _cmd_flow_sample(args, run):
    model = load_model(args.model)
    curve = None
    if args.curve:
        curve = read_curve_csv(args.curve).values
        run.inputs.append(args.curve)
    cfg = SampleConfig(
        seed=args.seed, steps=args.steps, cfg_scale=args.cfg_scale,
        curve=curve, class_id=args.class_id,
    )
    latent = sample(model, cfg, item_index=args.index)
    tag = f"flow-sample seed={args.seed} index={args.index}"
    write_features(
        FeatureSequence(data=latent.data.T, rate_hz=1.0, source_tag=tag), args.out
    )
    run.inputs.append(args.model)
    run.outputs.append(args.out)
    run.anchor = args.out
    run.seeds = {"sample": args.seed}
    run.params = {
        "command": "flow sample",
        "steps": args.steps,
        "cfg_scale": args.cfg_scale,
        "class_id": args.class_id,
        "index": args.index,
    }
    return (
        f"flow sample: {latent.channels}x{latent.length} latent -> {args.out}"
    )


def _cmd_flow_swap_eval(args, run):
    model = load_model(args.model)
    curves = _load_curves(args.curves, 1)
    cfg = SampleConfig(
        seed=args.seed, steps=args.steps, cfg_scale=args.cfg_scale,
        class_id=args.class_id,
    )
    result = swap_fidelity(model, curves, cfg)
    run.inputs.append(args.model)
    run.inputs.extend(args.curves)
    run.seeds = {"sample": args.seed}
    run.params = {
        "command": "flow swap-eval",
        "steps": args.steps,
        "cfg_scale": args.cfg_scale,
        "class_id": args.class_id,
    }
    _finish_metric(
        args, run, "swap_fidelity", result.mean,
        {"cfg_scale": args.cfg_scale, "steps": args.steps}, list(result.per_item),
    )
    if args.figure:
        from dataclasses import replace

        from .curves import standardize

        pairs = []
        for i, c in enumerate(curves):
            latent = sample(model, replace(cfg, curve=c.values), item_index=i)
            pairs.append((standardize(c.values)[0], standardize(rms_envelope(latent))[0]))
            if len(pairs) == 8:
                break
        save_envelope_figure(pairs, list(result.per_item[: len(pairs)]), args.figure)
        run.outputs.append(args.figure)
    return (
        f"swap-eval: mean={result.mean:.6f} used={result.used} "
        f"skipped={result.skipped}"
    )


# --- plot ---

def _cmd_plot(args, run):
    curves = [read_curve_csv(p) for p in args.curve]
    events = read_timeline_json(args.events) if args.events else None
    emit_plot(curves, events, args.out)
    run.inputs.extend(args.curve)
    if args.events:
        run.inputs.append(args.events)
    run.outputs.append(args.out)
    run.anchor = args.out
    run.params = {"command": "plot", "curves": len(curves)}
    return f"plot: {len(curves)} curve(s) -> {args.out}"


# --- parser ---

def build_parser() -> _Parser:
    parser = _Parser(prog="evc", description=__doc__)
    parser.add_argument("--version", action="version", version=f"evc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(group, name, func, **kwargs):
        p = group.add_parser(name, **kwargs)
        p.set_defaults(func=func)
        p.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
        return p

    features = sub.add_parser("features", help="EVCF inspection and conversion")
    fsub = features.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    p = add(fsub, "info", _cmd_features_info, help="print EVCF header summary")
    p.add_argument("--features", required=True)
    p = add(fsub, "convert", _cmd_features_convert, help="convert EVCF <-> CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", dest="outfile", required=True)
    p.add_argument("--rate", type=float, help="sampling rate (required for CSV input)")
    p.add_argument("--tag", help="source tag override")

    curve = sub.add_parser("curve", help="event-curve extraction and analysis")
    csub = curve.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    p = add(csub, "extract", _cmd_curve_extract, help="EVCF -> event-curve CSV")
    p.add_argument("--features", action="append", required=True,
                   help="EVCF input (repeat for batch mode; --out becomes a directory)")
    p.add_argument("--length", type=int, default=394)
    p.add_argument("--kernel", type=int, default=31)
    p.add_argument("--duration", type=float, required=True,
                   help="clip duration in seconds for the resampled curve")
    p.add_argument("--out", required=True)
    p.add_argument("--figure", help="optional matplotlib figure path")
    p.add_argument("--jobs", type=int, default=1)
    p = add(csub, "correlate", _cmd_curve_correlate, help="windowed Pearson correlation")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--anchors", required=True, help="EventTimeline JSON of window centers")
    p.add_argument("--window", type=float, default=1.0)
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--figure", help="optional matplotlib figure path")
    p = add(csub, "peaks", _cmd_curve_peaks, help="peak picking -> timeline JSON")
    p.add_argument("--curve", required=True)
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--min-separation", type=float, default=0.0)
    p.add_argument("--out", required=True)

    metrics = sub.add_parser("metrics", help="synchronization and distribution metrics")
    msub = metrics.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    p = add(msub, "sch", _cmd_metrics_sch, help="scene-cut hit ratio")
    p.add_argument("--cuts", required=True)
    p.add_argument("--onsets", required=True)
    p.add_argument("--tolerance", type=float, default=0.1)
    p.add_argument("--out", help="report JSON path")
    p = add(msub, "beat", _cmd_metrics_beat, help="beat coverage / hit / F1")
    p.add_argument("--motion", required=True)
    p.add_argument("--music", required=True)
    p.add_argument("--tolerance", type=float, default=0.2)
    p.add_argument("--out", help="report JSON path")
    p = add(msub, "td", _cmd_metrics_td, help="tempo deviation in BPM")
    p.add_argument("--motion", required=True)
    p.add_argument("--music", required=True)
    p.add_argument("--out", help="report JSON path")
    p = add(msub, "fd", _cmd_metrics_fd, help="curve Frechet distance")
    p.add_argument("--mode", default="M", choices=sorted(FD_MODES))
    p.add_argument("--generated", action="append", required=True,
                   help="generated music curve CSV (repeatable)")
    p.add_argument("--reference", action="append",
                   help="reference music curve CSV (repeatable)")
    p.add_argument("--video", action="append",
                   help="video curve CSV (repeatable; paired modes)")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="report JSON path")

    flow = sub.add_parser("flow", help="toy rectified-flow training and sampling")
    wsub = flow.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    p = add(wsub, "train", _cmd_flow_train, help="train on the synthetic dataset")
    p.add_argument("--config", required=True, help="TrainConfig JSON")
    p.add_argument("--data-seed", type=int, required=True)
    p.add_argument("--data-size", type=int, default=512)
    p.add_argument("--channels", type=int, default=8)
    p.add_argument("--length", type=int, default=64)
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--out", required=True, help="model checkpoint path")
    p.add_argument("--trace", help="optional loss-trace CSV path")
    p = add(wsub, "sample", _cmd_flow_sample, help="sample one latent -> EVCF")
    p.add_argument("--model", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--steps", type=int, default=96)
    p.add_argument("--cfg-scale", type=float, default=1.0)
    p.add_argument("--curve", help="conditioning curve CSV (omit for null condition)")
    p.add_argument("--class-id", type=int)
    p.add_argument("--index", type=int, default=0, help="item index for the noise stream")
    p.add_argument("--out", required=True)
    p = add(wsub, "swap-eval", _cmd_flow_swap_eval, help="swap-fidelity over curves")
    p.add_argument("--model", required=True)
    p.add_argument("--curves", action="append", required=True,
                   help="held-out curve CSV (repeatable)")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--steps", type=int, default=96)
    p.add_argument("--cfg-scale", type=float, default=2.0)
    p.add_argument("--class-id", type=int)
    p.add_argument("--out", help="report JSON path")
    p.add_argument("--figure", help="optional matplotlib envelope-grid figure")

    p = add(sub, "plot", _cmd_plot, help="deterministic SVG curve plot")
    p.add_argument("--curve", action="append", required=True,
                   help="curve CSV (repeatable)")
    p.add_argument("--events", help="EventTimeline JSON of vertical markers")
    p.add_argument("--out", required=True)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        _configure_logging()
        args = build_parser().parse_args(argv)
        run = _Run(["evc", *argv])
        summary = args.func(args, run)
        manifest_path = run.finish(args.manifest)
        log.info("manifest: %s", manifest_path)
        print(summary)
        return 0
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 64
    except EvcError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: IoError: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
