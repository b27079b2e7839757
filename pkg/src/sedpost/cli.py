"""Command-line interface.

Subcommands wire the library into the standard workflow: ``synth``
generates a verifiable corpus, ``segment`` turns probability matrices
into a submission TSV, ``optimize`` tunes parametric segmenters, and
``evaluate`` scores a submission against strong annotations.

Exit codes: 0 success, 1 usage error, 2 data/configuration error,
3 internal error. Output files are written atomically (temp file +
rename). Every command is deterministic given its inputs and flags.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
import tempfile
from pathlib import Path

from .core import (
    DCASE_CLASSES,
    DEFAULT_FRAME_DURATION,
    ConfigurationError,
    METHODS,
    SegmenterConfig,
    default_margin_frames,
    is_class_dependent,
    is_parametric,
)
from . import dataio, paramfiles
from .metrics import score
from .optimizer import optimize_class_dependent, optimize_class_independent
from .segmentation import compute_datawise_thresholds, segment_dataset
from .synthgen import SynthSpec, generate

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; this toolkit reserves 2 for
    data errors, so remap to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _atomic_write_text(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as stream:
            stream.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _write_json(path: str | os.PathLike, payload) -> None:
    _atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sedpost", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    seg = sub.add_parser("segment", help="turn probability CSVs into a submission TSV")
    seg.add_argument("--pred-dir", required=True, help="directory of per-clip probability CSVs")
    seg.add_argument("--method", choices=METHODS, help="segmentation method (or set it in --config)")
    seg.add_argument("--config", help="parameter file (required by the parametric methods)")
    seg.add_argument("--frame-duration", type=float, default=DEFAULT_FRAME_DURATION,
                     help="seconds per frame (default 10/431)")
    seg.add_argument("--tags", help="weak-tag TSV enabling the audio-tagging oracle")
    seg.add_argument("--margin", type=float, default=0.2,
                     help="merge/prune tolerance in seconds (default 0.2); the config file margins win")
    seg.add_argument("--out", required=True, help="output submission TSV")

    ev = sub.add_parser("evaluate", help="score a submission TSV against annotations")
    ev.add_argument("--ref", required=True, help="reference annotation TSV")
    ev.add_argument("--est", required=True, help="estimated submission TSV")
    ev.add_argument("--onset-collar", type=float, default=0.2, help="onset tolerance, seconds")
    ev.add_argument("--offset-ratio", type=float, default=0.2,
                    help="offset tolerance as a fraction of the reference length")
    ev.add_argument("--report", help="also write a JSON report here")

    opt = sub.add_parser("optimize", help="tune a parametric method on a dataset")
    opt.add_argument("--pred-dir", required=True)
    opt.add_argument("--ref", required=True, help="annotation TSV of the optimization split")
    opt.add_argument("--method", required=True,
                     choices=[m for m in METHODS if is_parametric(m)])
    opt.add_argument("--space", required=True, help="parameter bounds file")
    opt.add_argument("--points", type=int, default=9, help="grid points per dimension")
    opt.add_argument("--steps", type=int, default=4, help="refinement steps (dicho mode)")
    opt.add_argument("--mode", choices=("grid", "dicho"), default="dicho")
    opt.add_argument("--frame-duration", type=float, default=DEFAULT_FRAME_DURATION)
    opt.add_argument("--margin", type=float, default=0.2)
    opt.add_argument("--onset-collar", type=float, default=0.2)
    opt.add_argument("--offset-ratio", type=float, default=0.2)
    opt.add_argument("--out-config", required=True, help="where to write the tuned parameter file")
    opt.add_argument("--report", help="also write a JSON optimization report here")

    syn = sub.add_parser("synth", help="generate a synthetic corpus with ground truth")
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--clips", type=int, default=100)
    syn.add_argument("--out-dir", required=True)
    syn.add_argument("--classes", help="comma-separated class list (default: the 10 domestic classes)")
    syn.add_argument("--max-events", type=int, default=3)
    syn.add_argument("--min-duration", type=float, default=0.5)
    syn.add_argument("--max-duration", type=float, default=3.0)
    syn.add_argument("--inside-prob", type=float, default=0.9)
    syn.add_argument("--outside-prob", type=float, default=0.1)
    syn.add_argument("--noise-sigma", type=float, default=0.05)
    syn.add_argument("--render-window", type=int, default=5)
    syn.add_argument("--frames", type=int, default=431)
    syn.add_argument("--frame-duration", type=float, default=DEFAULT_FRAME_DURATION)
    return parser


def _cmd_segment(args) -> int:
    dataset = dataio.read_prediction_dir(args.pred_dir, args.frame_duration)
    margin_frames = default_margin_frames(args.frame_duration, args.margin)
    if args.config:
        config = paramfiles.read_config(
            args.config,
            method=args.method,
            min_gap_frames=margin_frames,
            min_len_frames=margin_frames,
        )
    else:
        if args.method is None:
            raise ConfigurationError("--method is required when no --config is given")
        config = SegmenterConfig(
            method=args.method,
            min_gap_frames=margin_frames,
            min_len_frames=margin_frames,
        )
    oracle = dataio.read_weak_tags_tsv(args.tags) if args.tags else None
    thresholds = None
    if not is_parametric(config.method):
        thresholds = compute_datawise_thresholds(dataset)
    events = segment_dataset(dataset, config, thresholds=thresholds, oracle=oracle)
    _atomic_write_text(args.out, dataio.events_tsv_text(events))
    print(f"{len(events)} events from {len(dataset)} clips -> {args.out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    annotations = dataio.read_annotations_tsv(args.ref)
    estimated = dataio.read_annotations_tsv(args.est)
    for clip in estimated.clips:
        if clip not in annotations.clips:
            raise ConfigurationError(f"estimated events reference unknown clip {clip!r}")
    report = score(
        annotations,
        estimated.events,
        onset_collar=args.onset_collar,
        offset_ratio=args.offset_ratio,
    )
    for name in sorted(report.per_class_f1):
        tp, fp, fn = report.counts[name]
        print(f"{name}: F1 {report.per_class_f1[name]:.3f} (tp {tp} fp {fp} fn {fn})")
    print(f"macro-F1 {report.macro_f1:.3f}")
    print(f"error-rate {report.error_rate:.3f}")
    if args.report:
        _write_json(args.report, {
            "onset_collar": args.onset_collar,
            "offset_ratio": args.offset_ratio,
            "per_class": {
                name: {
                    "tp": report.counts[name][0],
                    "fp": report.counts[name][1],
                    "fn": report.counts[name][2],
                    "f1": report.per_class_f1[name],
                }
                for name in report.per_class_f1
            },
            "macro_f1": report.macro_f1,
            "error_rate": report.error_rate,
        })
    return EXIT_OK


def _search_payload(result) -> dict:
    return {
        "best_params": dict(result.best_params),
        "best_value": result.best_value,
        "n_evaluations": result.n_evaluations,
        "steps": [
            {
                "bounds": {k: list(v) for k, v in step.bounds.items()},
                "grid": {k: list(v) for k, v in step.grid.items()},
                "best_params": dict(step.best_params),
                "best_value": step.best_value,
                "n_evaluations": step.n_evaluations,
            }
            for step in result.steps
        ],
    }


def _cmd_optimize(args) -> int:
    dataset = dataio.read_prediction_dir(args.pred_dir, args.frame_duration)
    annotations = dataio.read_annotations_tsv(args.ref)
    space = paramfiles.read_space(args.space, points_per_dim=args.points, steps=args.steps)
    optimize = (
        optimize_class_dependent if is_class_dependent(args.method)
        else optimize_class_independent
    )
    outcome = optimize(
        args.method,
        space,
        dataset,
        annotations,
        mode=args.mode,
        onset_collar=args.onset_collar,
        offset_ratio=args.offset_ratio,
        margin=args.margin,
    )
    buf = io.StringIO()
    paramfiles.write_config(outcome.config, buf)
    _atomic_write_text(args.out_config, buf.getvalue())
    for scope, result in outcome.searches.items():
        best = ", ".join(f"{k}={v}" for k, v in result.best_params.items())
        print(f"[{scope}] best {result.best_value:.4f} at {best} "
              f"({result.n_evaluations} evaluations)")
    print(f"objective {outcome.objective_value:.4f}, "
          f"{outcome.n_evaluations} evaluations -> {args.out_config}")
    if args.report:
        _write_json(args.report, {
            "method": args.method,
            "mode": args.mode,
            "points_per_dim": args.points,
            "steps": args.steps,
            "margin": args.margin,
            "onset_collar": args.onset_collar,
            "offset_ratio": args.offset_ratio,
            "objective_value": outcome.objective_value,
            "n_evaluations": outcome.n_evaluations,
            "searches": {
                scope: _search_payload(result)
                for scope, result in outcome.searches.items()
            },
        })
    return EXIT_OK


def _cmd_synth(args) -> int:
    spec = SynthSpec(
        seed=args.seed,
        n_clips=args.clips,
        class_names=tuple(args.classes.split(",")) if args.classes else SynthSpec.class_names,
        max_events=args.max_events,
        min_duration=args.min_duration,
        max_duration=args.max_duration,
        inside_prob=args.inside_prob,
        outside_prob=args.outside_prob,
        noise_sigma=args.noise_sigma,
        render_window=args.render_window,
        n_frames=args.frames,
        frame_duration=args.frame_duration,
    )
    annotations, preds = generate(spec)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for pred in preds:
        buf = io.StringIO()
        dataio.write_probability_csv(pred, buf)
        _atomic_write_text(out_dir / f"{pred.clip_id}.csv", buf.getvalue())
    _atomic_write_text(out_dir / "annotations.tsv", dataio.events_tsv_text(annotations.events))
    buf = io.StringIO()
    dataio.write_weak_tags_tsv(dataio.derive_weak_tags(annotations), buf)
    _atomic_write_text(out_dir / "tags.tsv", buf.getvalue())
    print(f"{len(preds)} clips, {len(annotations.events)} events -> {out_dir}")
    return EXIT_OK


_COMMANDS = {
    "segment": _cmd_segment,
    "evaluate": _cmd_evaluate,
    "optimize": _cmd_optimize,
    "synth": _cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ParseError, ConfigurationError, ParameterError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
