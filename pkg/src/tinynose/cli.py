"""Command-line entry point: ``tinynose <subcommand> ...``."""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import TinyNoseError
from .model_io import (
    ModelFile,
    emit_embedded_source,
    emit_model,
    load_dataset_csv,
    load_published_model,
    parse_model,
    write_dataset_csv,
)
from .pipeline import classify_frame, confusion_matrix, format_report, run_stream
from .sensing import AcquisitionProtocol, SensorFrame, iter_acquisition, load_protocol, simulate_acquisition
from .training import TrainConfig, predict_indices, train

PUBLISHED = "@published"


def _info(args, *lines: str) -> None:
    if not args.quiet:
        for line in lines:
            print(line)


def _read(path) -> str:
    return Path(path).read_text()


def _write(path, text: str) -> None:
    Path(path).write_text(text)


def _load_model(spec: str) -> ModelFile:
    if spec == PUBLISHED:
        return load_published_model()
    return parse_model(_read(spec))


def _protocol(path: Optional[str]) -> AcquisitionProtocol:
    return load_protocol(_read(path)) if path else AcquisitionProtocol()


def _fractions(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated fractions")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}")


def _counts(text: str) -> tuple[int, ...]:
    try:
        values = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of integers: {text!r}")
    if len(values) != 5:
        raise argparse.ArgumentTypeError("expected five comma-separated ADC counts")
    return values


def _figure_path(report: str) -> Path:
    return Path(report).with_suffix(".png")


# --------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    protocol = _protocol(args.protocol)
    data = simulate_acquisition(protocol, args.seed)
    _write(args.out, write_dataset_csv(data))
    counts = data.class_counts()
    _info(args, *(f"{c.label.slug}: {counts.get(c.label, 0)} frames" for c in protocol.compounds))
    _info(args, f"total: {len(data)} frames -> {args.out}")
    return 0


def cmd_train(args) -> int:
    data = load_dataset_csv(_read(args.data))
    config = TrainConfig(
        base_learning_rate=args.base_learning_rate,
        max_epochs=args.max_epochs,
        target_mse=args.target_mse,
        seed=args.seed,
        init_range=args.init_range,
        validation_patience=args.validation_patience,
        split_fractions=args.split_fractions,
    )
    report = train(data, config)
    _write(args.out, emit_model(ModelFile(report.final_params, report.normalizer)))

    if args.report:
        rows = ["epoch,train_mse,val_mse"]
        for k, m in enumerate(report.epoch_mse):
            v = repr(report.validation_mse[k]) if k < len(report.validation_mse) else ""
            rows.append(f"{k + 1},{m!r},{v}")
        _write(args.report, "\n".join(rows) + "\n")
        if args.plot:
            from .plotting import plot_training_history

            plot_training_history(
                report.epoch_mse, report.validation_mse, _figure_path(args.report), config.target_mse
            )

    final = report.epoch_mse[-1] if report.epoch_mse else float("nan")
    lines = [
        f"stop_reason: {report.stop_reason.value}",
        f"epochs: {report.epochs_run}",
        f"train_mse: {final:.6g}",
    ]
    if len(report.test_set):
        x = report.normalizer.apply(report.test_set.raw_matrix())
        truth = np.array([label.index for label in report.test_set.labels])
        acc = float(np.mean(predict_indices(report.final_params, x) == truth))
        lines.append(f"test_accuracy: {acc:.6f} ({len(report.test_set)} frames)")
    _info(args, *lines)
    return 0


def cmd_eval(args) -> int:
    model = _load_model(args.model)
    data = load_dataset_csv(_read(args.data))
    if len(data) == 0:
        raise TinyNoseError(f"{args.data}: dataset has no frames")
    decisions = [classify_frame(model.params, model.normalizer, f, args.threshold) for f in data.frames]
    cm = confusion_matrix(decisions, data.labels)
    print(format_report(cm))
    if args.report:
        rows = ["truth,Lemon,Banana,Grape,Unknown"]
        for label, counts, unk in zip(("Lemon", "Banana", "Grape"), cm.counts, cm.unknown):
            rows.append(",".join([label, *map(str, counts), str(unk)]))
        _write(args.report, "\n".join(rows) + "\n")
        if args.plot:
            from .plotting import plot_confusion_matrix

            plot_confusion_matrix(cm, _figure_path(args.report))
    return 0


def cmd_classify(args) -> int:
    model = _load_model(args.model)
    frame = SensorFrame(0, args.values)
    print(classify_frame(model.params, model.normalizer, frame, args.threshold).to_line())
    return 0


def cmd_stream(args) -> int:
    model = _load_model(args.model)
    if args.live_sim:
        source = (frame for frame, _ in iter_acquisition(_protocol(args.protocol), args.seed))
    else:
        source = iter(load_dataset_csv(_read(args.data)).frames)

    def sink(decision) -> None:
        print(decision.to_line(), flush=args.realtime)

    summary = run_stream(
        model.params,
        model.normalizer,
        source,
        sink,
        sample_period_ms=args.period_ms,
        threshold=args.threshold,
        realtime=args.realtime,
    )
    if not args.quiet:
        counts = " ".join(f"{k.name}={v}" for k, v in sorted(summary.label_counts.items(), key=lambda kv: kv[0].value))
        print(f"frames: {summary.frames} {counts}".rstrip(), file=sys.stderr)
    return 0


def cmd_export(args) -> int:
    model = _load_model(args.model)
    _write(args.out, emit_embedded_source(model))
    _info(args, f"wrote {args.out}")
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="RNG seed (default 0)")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="tinynose", description=__doc__)
    parser.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    parser.add_argument("--quiet", action="store_true", help="suppress informational output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate an acquisition session")
    p.add_argument("--protocol", help="protocol file (INI); built-in defaults if omitted")
    p.add_argument("--out", required=True, help="dataset CSV to write")
    p.set_defaults(func=cmd_simulate)

    defaults = TrainConfig()
    p = sub.add_parser("train", parents=[common], help="train a model from a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="model file to write")
    p.add_argument("--report", help="per-epoch MSE CSV (epoch,train_mse,val_mse)")
    p.add_argument("--plot", action="store_true", help="also render the report as PNG")
    p.add_argument("--base-learning-rate", type=float, default=defaults.base_learning_rate)
    p.add_argument("--max-epochs", type=int, default=defaults.max_epochs)
    p.add_argument("--target-mse", type=float, default=defaults.target_mse)
    p.add_argument("--init-range", type=float, default=defaults.init_range)
    p.add_argument("--validation-patience", type=int, default=defaults.validation_patience)
    p.add_argument(
        "--split-fractions", type=_fractions, default=defaults.split_fractions,
        help="train,validation,test (default 0.7,0.15,0.15)",
    )
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="confusion matrix and metrics")
    p.add_argument("--model", required=True, help=f"model file, or {PUBLISHED}")
    p.add_argument("--data", required=True)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--report", help="confusion matrix CSV to write")
    p.add_argument("--plot", action="store_true", help="also render the matrix as PNG")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("classify", parents=[common], help="classify one reading")
    p.add_argument("--model", required=True, help=f"model file, or {PUBLISHED}")
    p.add_argument("--values", type=_counts, required=True, help="five ADC counts, comma-separated")
    p.add_argument("--threshold", type=float, default=0.0)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("stream", parents=[common], help="emit one decision line per frame")
    p.add_argument("--model", required=True, help=f"model file, or {PUBLISHED}")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", help="dataset CSV to replay")
    src.add_argument("--live-sim", action="store_true", help="generate frames on the fly")
    p.add_argument("--protocol", help="protocol file for --live-sim")
    p.add_argument("--period-ms", type=int, default=500)
    p.add_argument("--threshold", type=float, default=0.0)
    p.add_argument("--realtime", action="store_true", help="pace output to --period-ms")
    p.set_defaults(func=cmd_stream)

    p = sub.add_parser("export", parents=[common], help="generate C source for the firmware")
    p.add_argument("--model", required=True, help=f"model file, or {PUBLISHED}")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        # Downstream closed early (e.g. piped into head); not an error here.
        devnull = os.open(os.devnull, os.O_WRONLY)
        os.dup2(devnull, sys.stdout.fileno())
        return 0
    except (TinyNoseError, ValueError, OSError, ZeroDivisionError) as exc:
        msg = " ".join(str(exc).split()) or type(exc).__name__
        print(f"tinynose: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
