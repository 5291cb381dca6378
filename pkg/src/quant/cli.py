"""Command line interface: ``quant {fit,predict,eval,sweep,compare}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .core import ConfigError, QuantError, encode_labels
from .datasets import (
    load_split,
    load_tsv,
    read_results,
    read_series_file,
    write_results,
)
from .forest import TrainConfig, parse_split_fraction
from .harness import (
    SweepSpec,
    evaluate,
    find_archive_datasets,
    load_sweep_dataset,
    sweep,
    write_sweep,
)
from .model import load_model, save_model, train
from .representations import parse_representations
from .stats import compare_results
from .transform import TransformConfig

log = logging.getLogger("quant")

PRESETS = {"default": {"depth": None, "divisor": 4}, "fast": {"depth": 5, "divisor": 8}}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.exit(2, f"error: {message}\n")


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _seed(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2**64)")
    return value


def _add_common(p, model_flags=True):
    p.add_argument("--seed", type=_seed, default=0, help="master random seed (default 0)")
    p.add_argument("--threads", type=_positive_int, default=1, help="worker threads; results do not depend on it")
    p.add_argument("-v", "--verbose", action="store_true", help="report per-phase timings")
    if not model_flags:
        return
    g = p.add_argument_group("transform and classifier")
    g.add_argument("--preset", choices=sorted(PRESETS), default="default",
                   help="'fast' uses depth 5 and m/8 quantiles per interval")
    g.add_argument("--depth", type=_positive_int, help="interval depth (default min(6, floor(log2 n) + 1))")
    g.add_argument("--div", type=_positive_int, help="quantiles per interval = 1 + (m - 1) // div (default 4)")
    g.add_argument("--reps", default="raw,diff1,diff2,fft", help="comma list of raw,diff1,diff2,fft")
    g.add_argument("--smooth-window", type=_positive_int, default=5, help="moving average window for diff1")
    ms = g.add_mutually_exclusive_group()
    ms.add_argument("--no-mean-subtract", dest="mean_mode", action="store_const", const="none",
                    help="never subtract the interval mean")
    ms.add_argument("--all-mean-subtract", dest="mean_mode", action="store_const", const="all",
                    help="subtract the interval mean from every quantile")
    g.add_argument("--trees", type=_positive_int, default=200, help="number of trees (default 200)")
    g.add_argument("--split-frac", default="0.1", help="candidate features per split: 'sqrt' or a fraction of p")
    g.add_argument("--max-depth", type=_positive_int, default=None, help="tree depth limit (default unlimited)")


def _configs(args) -> tuple[TransformConfig, TrainConfig]:
    preset = PRESETS[args.preset]
    tconf = TransformConfig(
        depth=args.depth if args.depth is not None else preset["depth"],
        divisor=args.div if args.div is not None else preset["divisor"],
        window=args.smooth_window,
        representations=parse_representations(args.reps),
        mean_subtraction=args.mean_mode or "alternate",
    )
    fconf = TrainConfig(
        num_trees=args.trees,
        split_fraction=parse_split_fraction(args.split_frac),
        max_depth=args.max_depth,
        seed=args.seed,
    )
    return tconf, fconf


def _out(path):
    if path is None or path == "-":
        return sys.stdout
    return open(path, "w", encoding="utf-8", newline="")


def cmd_fit(args):
    tconf, fconf = _configs(args)
    dataset = load_tsv(args.train)
    model, timings = train(dataset, tconf, fconf, threads=args.threads)
    save_model(model, args.out)
    print(f"q={dataset.n_examples} n={dataset.length} p={model.transform.n_features} "
          f"classes={dataset.n_classes} trees={fconf.num_trees}")
    print(f"transform_seconds={timings.transform_seconds:.3f} classifier_seconds={timings.classifier_seconds:.3f}")
    print(f"model written to {args.out}")


def cmd_predict(args):
    model = load_model(args.model)
    X, raw_labels = read_series_file(args.data)
    if X.shape[1] != model.n:
        raise ConfigError(f"length mismatch: model expects series of length {model.n}, data has length {X.shape[1]}")
    start = time.perf_counter()
    features = model.transform.transform(X, threads=args.threads)
    t_transform = time.perf_counter() - start
    start = time.perf_counter()
    proba = model.forest.predict_proba(features, threads=args.threads)
    t_classify = time.perf_counter() - start
    predicted = np.argmax(proba, axis=1)

    fh = _out(args.out)
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "label"] + [f"prob_{name}" for name in model.class_names])
        for i, (c, row) in enumerate(zip(predicted, proba)):
            w.writerow([i, model.class_names[c]] + [repr(float(v)) for v in row])
    finally:
        if fh is not sys.stdout:
            fh.close()

    known = set(model.class_names)
    if all(label in known for label in raw_labels):
        truth = encode_labels(raw_labels, model.class_names)
        print(f"accuracy={np.mean(predicted == truth):.6f} (labels present in data file)", file=sys.stderr)
    if args.verbose:
        print(f"transform_seconds={t_transform:.3f} classifier_seconds={t_classify:.3f}", file=sys.stderr)


def cmd_eval(args):
    tconf, fconf = _configs(args)
    if args.archive:
        if args.train or args.test:
            raise ConfigError("give either TRAIN TEST files or --archive, not both")
        names = [s for s in args.datasets.split(",") if s] if args.datasets else None
        pairs = [(tr, te) for _, tr, te in find_archive_datasets(args.archive, names)]
    else:
        if not (args.train and args.test):
            raise ConfigError("eval needs TRAIN and TEST files (or --archive DIR)")
        pairs = [(args.train, args.test)]

    def report(row, run_t):
        if args.verbose:
            print(
                f"{row.dataset} r={row.resample} acc={row.accuracy:.4f} "
                f"train[transform={run_t.fit.transform_seconds:.3f}s classifier={run_t.fit.classifier_seconds:.3f}s] "
                f"test[transform={run_t.predict.transform_seconds:.3f}s classifier={run_t.predict.classifier_seconds:.3f}s]",
                file=sys.stderr,
            )

    rows = []
    start = time.perf_counter()
    for train_path, test_path in pairs:
        train_set, test_set = load_split(train_path, test_path)
        got = evaluate(train_set, test_set, args.resamples, tconf, fconf, seed=args.seed,
                       threads=args.threads, timings=not args.no_timings, on_run=report)
        rows.extend(got)
        if got:
            acc = np.array([r.accuracy for r in got])
            print(f"{train_set.name}: accuracy {acc.mean():.4f} ± {acc.std():.4f} over {len(got)} resample(s)")
    total = time.perf_counter() - start
    write_results(rows, args.out)
    if rows and len(pairs) > 1:
        per_ds = {}
        for r in rows:
            per_ds.setdefault(r.dataset, []).append(r.accuracy)
        means = np.array([np.mean(v) for v in per_ds.values()])
        print(f"overall: mean accuracy {means.mean():.4f} ± {means.std():.4f} over {len(means)} datasets")
    print(f"total_seconds={total:.2f}; results written to {args.out}")


def cmd_sweep(args):
    spec = SweepSpec.parse(args.axis, args.values, folds=args.folds, seed=args.seed)
    tconf, fconf = _configs(args)
    datasets = [load_sweep_dataset(p, pool_test=args.pool_test) for p in args.datasets]
    records = sweep(datasets, spec, tconf, fconf, threads=args.threads, timings=not args.no_timings)
    write_sweep(records, args.out)
    summary = {}
    for rec in records:
        summary.setdefault(rec["value"], []).append(rec["accuracy"])
    for value, accs in summary.items():
        print(f"{args.axis}={value}: mean accuracy {np.mean(accs):.4f} over {len(accs)} fold(s)")
    print(f"results written to {args.out}")
    if args.plot:
        from .plotting import sweep_summary

        fig_path = Path(args.out).with_suffix(".png") if args.plot == "auto" else Path(args.plot)
        sweep_summary(records, args.axis, fig_path)
        print(f"figure written to {fig_path}")


def cmd_compare(args):
    result = compare_results(read_results(args.a), read_results(args.b))
    print(result.report(args.name_a, args.name_b))
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["dataset", f"accuracy_{args.name_a}", f"accuracy_{args.name_b}", "difference"])
            for name, a, b in zip(result.datasets, result.mean_a, result.mean_b):
                w.writerow([name, repr(float(a)), repr(float(b)), repr(float(a - b))])
    if args.plot:
        from .plotting import pairwise_accuracy

        if args.plot == "auto":
            fig_path = Path(args.out).with_suffix(".png") if args.out else Path("compare.png")
        else:
            fig_path = Path(args.plot)
        pairwise_accuracy(result, fig_path, args.name_a, args.name_b)
        print(f"figure written to {fig_path}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="quant", description="Quantile-feature interval method for time series classification.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fit", help="train a model on a TSV dataset")
    p.add_argument("train", help="training data (label, then values; tab separated)")
    p.add_argument("-o", "--out", required=True, help="model file to write")
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict with a saved model")
    p.add_argument("model")
    p.add_argument("data", help="series to classify (same TSV layout; labels are optional to score)")
    p.add_argument("-o", "--out", help="predictions CSV (default stdout)")
    _add_common(p, model_flags=False)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="train/test over stratified resamples; writes a results CSV")
    p.add_argument("train", nargs="?")
    p.add_argument("test", nargs="?")
    p.add_argument("--archive", help="directory in UCR layout: <name>/<name>_TRAIN.tsv, <name>_TEST.tsv")
    p.add_argument("--datasets", help="comma list restricting --archive to these dataset names")
    p.add_argument("-R", "--resamples", type=_positive_int, default=1, help="resamples 0..R-1; 0 is the original split")
    p.add_argument("-o", "--out", default="results.csv")
    p.add_argument("--no-timings", action="store_true", help="leave timing columns empty (byte-reproducible CSV)")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="cross-validated sensitivity sweep over one parameter")
    p.add_argument("datasets", nargs="+", help="dataset files, one dataset each")
    p.add_argument("--axis", required=True,
                   help="depth, divisor, representations, trees, split_fraction or smoothing")
    p.add_argument("--values", nargs="+", required=True,
                   help="values to try; representation sets are comma lists, e.g. raw,diff1,fft")
    p.add_argument("--folds", type=_positive_int, default=5)
    p.add_argument("--pool-test", action="store_true", help="pool a *_TRAIN file with its sibling *_TEST file")
    p.add_argument("-o", "--out", default="sweep.csv")
    p.add_argument("--plot", nargs="?", const="auto", help="write a summary figure (default: next to --out)")
    p.add_argument("--no-timings", action="store_true", help="leave the seconds column empty")
    _add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="win/draw/loss and Wilcoxon test between two results CSVs")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--name-a", default="A")
    p.add_argument("--name-b", default="B")
    p.add_argument("-o", "--out", help="per-dataset table CSV")
    p.add_argument("--plot", nargs="?", const="auto", help="write a pairwise accuracy figure")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        args.func(args)
    except (QuantError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
