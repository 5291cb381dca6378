"""Evaluation protocols: repeated train/test resamples and cross-validated parameter sweeps."""

from __future__ import annotations

import csv
import logging
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import ConfigError, DataError, LabeledDataset
from .datasets import (
    ResampleError,
    ResultRow,
    load_split,
    load_tsv,
    stratified_kfold,
    stratified_resample,
)
from .forest import TrainConfig, parse_split_fraction
from .model import Timings, train
from .representations import parse_representations
from .transform import TransformConfig

log = logging.getLogger(__name__)

SWEEP_AXES = ("depth", "divisor", "representations", "trees", "split_fraction", "smoothing")
SWEEP_HEADER = ("dataset", "axis", "value", "fold", "accuracy", "seconds")


@dataclass
class RunTimings:
    """Wall time of one train/test run, split by phase."""

    fit: Timings
    predict: Timings

    @property
    def train_seconds(self) -> float:
        return self.fit.total

    @property
    def test_seconds(self) -> float:
        return self.predict.total


def run_split(train_set, test_set, tconf, fconf, threads=1) -> tuple[float, RunTimings]:
    """Train on one split, return test accuracy and per-phase timings."""
    model, fit_t = train(train_set, tconf, fconf, threads=threads)
    pred_t = Timings()
    start = time.perf_counter()
    features = model.transform.transform(test_set.X, threads=threads)
    pred_t.transform_seconds = time.perf_counter() - start
    start = time.perf_counter()
    predicted = model.forest.predict(features, threads=threads)
    pred_t.classifier_seconds = time.perf_counter() - start
    accuracy = float(np.mean(predicted == test_set.y))
    return accuracy, RunTimings(fit_t, pred_t)


def evaluate(train_set, test_set, resamples, tconf, fconf, seed=0, threads=1, timings=True, on_run=None):
    """Run resamples ``0 .. resamples - 1`` of a train/test split.

    Resample 0 is the split as given. Resamples that cannot be stratified are
    skipped with a warning. ``on_run(row, run_timings)`` is called after each run.
    """
    rows = []
    for r in range(resamples):
        try:
            tr, te = stratified_resample(train_set, test_set, seed, r)
        except ResampleError as exc:
            log.warning("%s resample %d skipped: %s", train_set.name, r, exc)
            continue
        accuracy, run_t = run_split(tr, te, tconf, fconf, threads)
        row = ResultRow(
            dataset=train_set.name,
            resample=r,
            accuracy=accuracy,
            train_seconds=run_t.train_seconds if timings else None,
            test_seconds=run_t.test_seconds if timings else None,
        )
        rows.append(row)
        if on_run is not None:
            on_run(row, run_t)
    return rows


def find_archive_datasets(root, names=None) -> list[tuple[str, Path, Path]]:
    """Locate ``<root>/<name>/<name>_TRAIN.tsv`` and ``_TEST.tsv`` pairs (UCR archive layout)."""
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"{root}: not a directory")
    found = []
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        train_path = sub / f"{sub.name}_TRAIN.tsv"
        test_path = sub / f"{sub.name}_TEST.tsv"
        if train_path.is_file() and test_path.is_file():
            found.append((sub.name, train_path, test_path))
    if names:
        wanted = set(names)
        missing = wanted - {name for name, _, _ in found}
        if missing:
            raise DataError(f"datasets not found under {root}: {', '.join(sorted(missing))}")
        found = [f for f in found if f[0] in wanted]
    if not found:
        raise DataError(f"no <name>/<name>_TRAIN.tsv + _TEST.tsv pairs under {root}")
    return found


def parse_axis_value(axis: str, text: str):
    """Turn one command-line sweep value into its typed form, rejecting illegal values."""
    text = str(text).strip()
    try:
        if axis in ("depth", "divisor", "trees"):
            value = int(text)
            if value < 1:
                raise ValueError
            return value
        if axis == "smoothing":
            value = int(text)
            if value < 1 or value % 2 == 0:
                raise ValueError
            return value
    except ValueError:
        raise ConfigError(f"illegal value {text!r} for axis {axis}") from None
    if axis == "split_fraction":
        return parse_split_fraction(text)
    if axis == "representations":
        return parse_representations(text)
    raise ConfigError(f"unknown sweep axis {axis!r} (expected one of {', '.join(SWEEP_AXES)})")


def format_axis_value(axis: str, value) -> str:
    if axis == "representations":
        return "+".join(r.flag for r in value)
    return str(value)


def with_axis(tconf: TransformConfig, fconf: TrainConfig, axis: str, value):
    if axis == "depth":
        return replace(tconf, depth=value), fconf
    if axis == "divisor":
        return replace(tconf, divisor=value), fconf
    if axis == "smoothing":
        return replace(tconf, window=value), fconf
    if axis == "representations":
        return replace(tconf, representations=value), fconf
    if axis == "trees":
        return tconf, replace(fconf, num_trees=value)
    if axis == "split_fraction":
        return tconf, replace(fconf, split_fraction=value)
    raise ConfigError(f"unknown sweep axis {axis!r}")


@dataclass(frozen=True)
class SweepSpec:
    axis: str
    values: tuple
    folds: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r} (expected one of {', '.join(SWEEP_AXES)})")
        if not self.values:
            raise ConfigError("a sweep needs at least one value")
        if self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")

    @classmethod
    def parse(cls, axis, texts, folds=5, seed=0) -> SweepSpec:
        if axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {axis!r} (expected one of {', '.join(SWEEP_AXES)})")
        values, bad = [], []
        for text in texts:
            try:
                values.append(parse_axis_value(axis, text))
            except ConfigError:
                bad.append(str(text))
        if bad:
            raise ConfigError(f"illegal value(s) for axis {axis}: {', '.join(bad)}")
        return cls(axis, tuple(values), folds, seed)


def sweep(datasets, spec: SweepSpec, tconf=None, fconf=None, threads=1, timings=True):
    """Cross-validate every axis value on every dataset, other parameters held at the given base.

    Fold assignment depends only on the dataset and ``spec.seed``, so every
    axis value is evaluated on the same folds.
    """
    tconf = tconf or TransformConfig()
    fconf = fconf or TrainConfig(seed=spec.seed)
    configs = [(v, *with_axis(tconf, fconf, spec.axis, v)) for v in spec.values]
    records = []
    for ds in datasets:
        folds = stratified_kfold(ds, spec.folds, spec.seed)
        for value, tc, fc in configs:
            for f, test_idx in enumerate(folds):
                train_idx = np.concatenate([folds[g] for g in range(len(folds)) if g != f])
                start = time.perf_counter()
                accuracy, _ = run_split(ds.subset(train_idx), ds.subset(test_idx), tc, fc, threads)
                seconds = time.perf_counter() - start
                records.append(
                    {
                        "dataset": ds.name,
                        "axis": spec.axis,
                        "value": format_axis_value(spec.axis, value),
                        "fold": f,
                        "accuracy": accuracy,
                        "seconds": seconds if timings else None,
                    }
                )
    return records


def write_sweep(records, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for rec in records:
            secs = "" if rec["seconds"] is None else f"{rec['seconds']:.6f}"
            w.writerow([rec["dataset"], rec["axis"], rec["value"], rec["fold"], repr(rec["accuracy"]), secs])


def load_sweep_dataset(path, pool_test=False) -> LabeledDataset:
    """Load one dataset for cross-validation, optionally pooling its sibling ``_TEST`` file."""
    path = Path(path)
    if pool_test and path.stem.upper().endswith("_TRAIN"):
        test_path = path.with_name(path.stem[:-6] + "_TEST" + path.suffix)
        if test_path.is_file():
            tr, te = load_split(path, test_path)
            return LabeledDataset(np.concatenate([tr.X, te.X]), np.concatenate([tr.y, te.y]), tr.class_names, tr.name)
    return load_tsv(path)
