"""Dataset files, stratified resampling and cross-validation folds, results CSVs."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import DataError, LabeledDataset, encode_labels, relabel

RESULTS_HEADER = ("dataset", "resample", "accuracy", "train_seconds", "test_seconds")


class ResampleError(DataError):
    pass


def _parse_rows(lines, path, split, label_first=True):
    labels, rows = [], []
    width = None
    for lineno, line in lines:
        fields = split(line)
        if label_first:
            label, values = fields[0].strip(), fields[1:]
        else:
            label, values = fields[-1].strip(), fields[:-1]
        if not label:
            raise DataError(f"{path}:{lineno}: missing class label")
        if not values:
            raise DataError(f"{path}:{lineno}: row has no series values")
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise DataError(f"{path}:{lineno}: expected {width} values, found {len(values)} (ragged row)")
        try:
            row = [float(v) for v in values]
        except ValueError:
            bad = next(v for v in values if not _is_float(v))
            raise DataError(f"{path}:{lineno}: non-numeric value {bad.strip()!r}") from None
        if not all(math.isfinite(v) for v in row):
            raise DataError(f"{path}:{lineno}: NaN or infinite value (missing values are not supported)")
        labels.append(label)
        rows.append(row)
    if not rows:
        raise DataError(f"{path}: file contains no data rows")
    return np.array(rows, dtype=np.float64), labels


def _is_float(text):
    try:
        float(text)
        return True
    except ValueError:
        return False


def read_tsv(path) -> tuple[np.ndarray, list[str]]:
    """Read a UCR-style TSV file: class label, then the series values, tab separated.

    Returns the raw ``(q, n)`` values and the label strings.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    raw = text.rstrip("\r\n").split("\n") if text.strip() else []
    lines = []
    for lineno, line in enumerate(raw, start=1):
        line = line.rstrip("\r")
        if not line.strip():
            raise DataError(f"{path}:{lineno}: empty row")
        lines.append((lineno, line))
    return _parse_rows(lines, path, lambda s: s.split("\t"))


def read_ts(path) -> tuple[np.ndarray, list[str]]:
    """Read an equal-length univariate ``.ts`` file (``@`` header lines, then ``v1,v2,...:label``)."""
    path = Path(path)
    lines = []
    in_data = False
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("@"):
                key = line.split()[0].lower()
                if key == "@data":
                    in_data = True
                elif key == "@univariate" and line.split()[-1].lower() == "false":
                    raise DataError(f"{path}:{lineno}: multivariate .ts files are not supported")
                continue
            if not in_data:
                raise DataError(f"{path}:{lineno}: data row before @data")
            if line.count(":") != 1:
                raise DataError(f"{path}:{lineno}: expected 'values:label'")
            lines.append((lineno, line))
    return _parse_rows(lines, path, lambda s: s.replace(":", ",").split(","), label_first=False)


def read_series_file(path):
    if str(path).lower().endswith(".ts"):
        return read_ts(path)
    return read_tsv(path)


def dataset_name(path) -> str:
    stem = Path(path).stem
    for suffix in ("_TRAIN", "_TEST"):
        if stem.upper().endswith(suffix):
            return stem[: -len(suffix)]
    return stem


def load_tsv(path) -> LabeledDataset:
    """Load one dataset file; labels are mapped to ids by sorted label string."""
    X, raw = read_series_file(path)
    return LabeledDataset.from_raw(X, raw, name=dataset_name(path))


def load_split(train_path, test_path) -> tuple[LabeledDataset, LabeledDataset]:
    """Load a train/test pair with one class table built from the labels of both files."""
    Xtr, ltr = read_series_file(train_path)
    Xte, lte = read_series_file(test_path)
    if Xtr.shape[1] != Xte.shape[1]:
        raise DataError(f"train series have length {Xtr.shape[1]} but test series have length {Xte.shape[1]}")
    _, names = relabel(ltr + lte)
    name = dataset_name(train_path)
    train = LabeledDataset(Xtr, encode_labels(ltr, names), names, name)
    train.check_all_classes_present()
    return train, LabeledDataset(Xte, encode_labels(lte, names), names, name)


def write_tsv(dataset: LabeledDataset, path):
    """Write a dataset in the TSV layout read by :func:`load_tsv`; floats round-trip exactly."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(label + "\t" + "\t".join(repr(float(v)) for v in row) + "\n" for label, row in zip(dataset.labels(), dataset.X))


def stratified_resample(train: LabeledDataset, test: LabeledDataset, seed: int, r: int):
    """Reshuffle a train/test split class by class, keeping per-class train and test counts.

    Resample 0 is the original split. Resample ``r`` draws from
    ``numpy.random.default_rng([seed, r])``.
    """
    if train.class_names != test.class_names:
        raise ResampleError("train and test must share one class table (use load_split)")
    if r == 0:
        return train, test
    n_train = train.class_counts()
    n_test = test.class_counts()
    for c, name in enumerate(train.class_names):
        if n_train[c] == 0 or n_test[c] == 0:
            side = "train" if n_train[c] == 0 else "test"
            raise ResampleError(f"class {name!r} has no {side} examples; cannot stratify")

    X = np.concatenate([train.X, test.X])
    y = np.concatenate([train.y, test.y])
    rng = np.random.default_rng([int(seed), int(r)])
    tr, te = [], []
    for c in range(train.n_classes):
        members = rng.permutation(np.flatnonzero(y == c))
        tr.append(members[: n_train[c]])
        te.append(members[n_train[c] :])
    tr, te = np.sort(np.concatenate(tr)), np.sort(np.concatenate(te))
    return (
        LabeledDataset(X[tr], y[tr], train.class_names, train.name),
        LabeledDataset(X[te], y[te], train.class_names, test.name),
    )


def stratified_kfold(dataset: LabeledDataset, k: int, seed: int) -> list[np.ndarray]:
    """Split example indices into ``k`` folds with per-class counts within one of each other.

    Each class is shuffled, the classes are laid end to end, and positions are
    dealt round robin, so fold sizes also differ by at most one.
    """
    if k < 2:
        raise DataError(f"k must be >= 2, got {k}")
    counts = dataset.class_counts()
    small = [dataset.class_names[c] for c in range(dataset.n_classes) if 0 < counts[c] < k]
    if small:
        raise DataError(f"class(es) {', '.join(small)} have fewer than {k} examples")
    rng = np.random.default_rng(int(seed))
    order = np.concatenate(
        [rng.permutation(np.flatnonzero(dataset.y == c)) for c in range(dataset.n_classes)]
    )
    assign = np.arange(order.size) % k
    return [np.sort(order[assign == f]) for f in range(k)]


@dataclass(frozen=True)
class ResultRow:
    dataset: str
    resample: int
    accuracy: float
    train_seconds: float | None
    test_seconds: float | None


def _fmt_seconds(s):
    return "" if s is None else f"{s:.6f}"


def write_results(rows, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULTS_HEADER)
        for row in rows:
            w.writerow(
                [row.dataset, row.resample, repr(float(row.accuracy)),
                 _fmt_seconds(row.train_seconds), _fmt_seconds(row.test_seconds)]
            )


def read_results(path) -> list[ResultRow]:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != RESULTS_HEADER:
            raise DataError(f"{path}: expected header {','.join(RESULTS_HEADER)}")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(RESULTS_HEADER):
                raise DataError(f"{path}:{lineno}: expected {len(RESULTS_HEADER)} fields")
            try:
                acc = float(rec[2])
                train_s = float(rec[3]) if rec[3] else None
                test_s = float(rec[4]) if rec[4] else None
                rows.append(ResultRow(rec[0], int(rec[1]), acc, train_s, test_s))
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            if not 0.0 <= acc <= 1.0:
                raise DataError(f"{path}:{lineno}: accuracy {acc} outside [0, 1]")
    return rows
