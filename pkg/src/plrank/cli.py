"""Command line interface for training and benchmarking ranking policies.

The default invocation trains a model:

    plrank --synth 100,20,10,5 --estimator pl-rank-2 --dynamic-n --out run.jsonl

Two subcommands cover benchmarking: ``plrank bench`` compares estimators on
one dataset and seed set, and ``plrank bench-backends`` times the compiled
kernels against the numpy fallback on identical inputs.  ``plrank train``
is accepted as an explicit alias of the default.

Training writes one JSON object per epoch to the JSONL path given by
--out, a run summary next to it (<out>.summary.json) and a CSV companion
(<out>.csv) with the same per-epoch fields for plotting.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from .benchmark import benchmark_backends, benchmark_estimators, compare_kernel_times
from .estimators import ESTIMATOR_NAMES
from .kernels import active_backend_name, have_compiled
from .model import save_checkpoint
from .training import TrainConfig, TrainingAborted, train

SUBCOMMANDS = ("train", "bench", "bench-backends")


def _parse_synth(text: str):
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError(
            "synthetic spec must be QUERIES,ITEMS,FEATURES,LEVELS, e.g. 100,20,10,5"
        )
    try:
        return tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"synthetic spec {text!r} has non-integer fields") from None


def _parse_hidden(text: str):
    if not text.strip():
        return ()
    try:
        return tuple(int(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"hidden sizes {text!r} must be comma-separated integers") from None


def _add_data_args(parser):
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--data", metavar="PATH", help=(
        "dataset file in SVMLight/LETOR format (split 80/10/10 by query), or a "
        "directory containing train.txt, vali.txt and test.txt"))
    source.add_argument("--synth", type=_parse_synth, metavar="Q,I,F,L",
                        help="synthesize Q queries of I items with F features and L label levels")
    norm = parser.add_mutually_exclusive_group()
    norm.add_argument("--normalize", dest="normalize", action="store_true", default=True,
                      help="min-max scale features with train-split statistics (default)")
    norm.add_argument("--no-normalize", dest="normalize", action="store_false")


def _add_train_args(parser, include_outputs=True):
    _add_data_args(parser)
    parser.add_argument("--estimator", choices=ESTIMATOR_NAMES, default="pl-rank-2")
    parser.add_argument("--metric", choices=("dcg", "prec", "arp"), default="dcg")
    parser.add_argument("--cutoff", type=int, default=5, metavar="K")
    budget = parser.add_mutually_exclusive_group()
    budget.add_argument("--samples", type=int, metavar="N",
                        help="fixed number of sampled rankings per query per epoch")
    budget.add_argument("--dynamic-n", action="store_true",
                        help="ramp the sample budget from 10 toward 100 over 40 epochs (default)")
    parser.add_argument("--epochs", type=int, default=40, metavar="E")
    parser.add_argument("--lr", type=float, default=0.01)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--alpha", type=float, default=1.0, help="relevance objective weight")
    parser.add_argument("--beta", type=float, default=0.0,
                        help="fairness objective weight; 0 disables exposure estimation")
    parser.add_argument("--eval-samples", type=int, default=100, metavar="M")
    parser.add_argument("--exposure-samples", type=int, default=1000, metavar="M")
    parser.add_argument("--share-exposure-samples", action="store_true",
                        help="reuse the gradient-estimation rankings for exposure estimates")
    parser.add_argument("--model", choices=("mlp", "linear"), default="mlp")
    parser.add_argument("--hidden", type=_parse_hidden, default=(32, 32), metavar="H1,H2",
                        help="hidden layer sizes for the mlp model (default 32,32)")
    parser.add_argument("--threads", type=int, default=1, metavar="T",
                        help="macro-batch size for parallel per-query gradients (1 = pure SGD)")
    if include_outputs:
        parser.add_argument("--out", metavar="PATH", help="JSONL epoch records path")
        parser.add_argument("--checkpoint", metavar="PATH",
                            help="write the final model here as JSON")


def _config_from_args(args) -> TrainConfig:
    return TrainConfig(
        data_path=args.data,
        synth=args.synth,
        estimator=args.estimator,
        metric=args.metric,
        cutoff=args.cutoff,
        n_samples=args.samples,
        epochs=args.epochs,
        learning_rate=args.lr,
        seed=args.seed,
        alpha=args.alpha,
        beta=args.beta,
        eval_samples=args.eval_samples,
        model=args.model,
        hidden=args.hidden,
        exposure_samples=args.exposure_samples,
        share_exposure_samples=args.share_exposure_samples,
        normalize=args.normalize,
        threads=args.threads,
    )


def _companion_paths(out_path: str):
    stem = out_path[:-6] if out_path.endswith(".jsonl") else out_path
    return f"{stem}.summary.json", f"{stem}.csv"


def write_records(records, out_path: str, summary: dict):
    summary_path, csv_path = _companion_paths(out_path)
    with open(out_path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    fields = ["epoch", "n_samples", "train_metric", "validation_metric", "disparity",
              "sample_seconds", "estimate_seconds", "update_seconds", "eval_seconds"]
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for record in records:
            writer.writerow(record.to_dict())


def _cmd_train(args) -> int:
    config = _config_from_args(args)
    try:
        result = train(config)
    except TrainingAborted as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args.out and exc.records:
            write_records(exc.records, args.out, {"aborted": True, "reason": str(exc)})
        if args.checkpoint and exc.params is not None:
            save_checkpoint(exc.params, args.checkpoint)
            print(f"last good model saved to {args.checkpoint}", file=sys.stderr)
        return 1
    if args.out:
        write_records(result.records, args.out, result.summary)
    if args.checkpoint:
        save_checkpoint(result.params, args.checkpoint)
    last = result.records[-1]
    print(json.dumps({
        "estimator": config.estimator,
        "backend": active_backend_name(),
        "epochs": config.epochs,
        "final_train_metric": last.train_metric,
        "final_validation_metric": last.validation_metric,
        "test_metric": result.summary["test_metric"],
        "total_seconds": round(result.summary["total_seconds"], 3),
    }, sort_keys=True))
    return 0


def _cmd_bench(args) -> int:
    base = _config_from_args(args)
    report = benchmark_estimators(
        base, estimators=args.estimators, repeats=args.repeats, threshold=args.threshold
    )
    report["kernel_seconds_paired"] = compare_kernel_times(
        args.estimators or list(ESTIMATOR_NAMES),
        n_items=args.bench_items, cutoff=base.cutoff,
        n_samples=base.n_samples or 100, seed=base.seed,
    )
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def _cmd_bench_backends(args) -> int:
    report = benchmark_backends(
        n_items=args.items, cutoff=args.cutoff, n_samples=args.samples,
        seed=args.seed, repeats=args.repeats,
    )
    report["active_backend"] = active_backend_name()
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    if not have_compiled():
        print("note: compiled backend unavailable, numpy times only", file=sys.stderr)
    return 0


def build_parser(command: str) -> argparse.ArgumentParser:
    if command == "train":
        parser = argparse.ArgumentParser(
            prog="plrank", description="Train a stochastic ranking model.")
        _add_train_args(parser)
        return parser
    if command == "bench":
        parser = argparse.ArgumentParser(
            prog="plrank bench", description="Compare estimators on one dataset and seed set.")
        _add_train_args(parser, include_outputs=False)
        parser.add_argument("--estimators", nargs="+", choices=ESTIMATOR_NAMES, default=None)
        parser.add_argument("--repeats", type=int, default=3)
        parser.add_argument("--threshold", type=float, default=None,
                            help="validation metric level for time-to-threshold reporting")
        parser.add_argument("--bench-items", type=int, default=100,
                            help="item count for the paired kernel timing table")
        parser.add_argument("--out", metavar="PATH", help="write the JSON report here")
        return parser
    parser = argparse.ArgumentParser(
        prog="plrank bench-backends",
        description="Time the compiled kernels against the numpy fallback.")
    parser.add_argument("--items", type=int, default=200)
    parser.add_argument("--cutoff", type=int, default=5)
    parser.add_argument("--samples", type=int, default=200)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", metavar="PATH")
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    command = "train"
    if argv and argv[0] in SUBCOMMANDS:
        command = argv.pop(0)
    parser = build_parser(command)
    args = parser.parse_args(argv)
    try:
        if command == "bench":
            return _cmd_bench(args)
        if command == "bench-backends":
            return _cmd_bench_backends(args)
        return _cmd_train(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
