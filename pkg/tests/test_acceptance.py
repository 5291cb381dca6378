"""Acceptance criteria. Each test records one PASS/FAIL line, printed in the terminal summary."""

import csv
import time

import numpy as np
import pytest
from conftest import bump_task, scale_task, write_tsv_rows
from oracles import naive_dft_magnitude, sorted_interp_quantiles

from quant import forest as qforest
from quant.cli import main
from quant.core import LabeledDataset
from quant.intervals import interval_count, make_intervals
from quant.model import train
from quant.representations import dft_magnitude
from quant.transform import (
    TransformConfig,
    apply,
    fit,
    interval_quantiles,
    quantile_count,
)


def _default_accuracy(task, seed):
    Xtr, ytr, Xte, yte = task(seed)
    model, _ = train(LabeledDataset(Xtr, ytr, ("0", "1")))
    return float(np.mean(model.predict(Xte) == yte))


def test_01_interval_count(record_criterion):
    start = time.perf_counter()
    n120 = len(make_intervals(64, 6))
    formula_ok = True
    for d in range(1, 9):
        for mult in (1, 2, 3, 5):
            n = mult * 2 ** (d - 1)
            formula_ok &= len(make_intervals(n, d)) == interval_count(d)
    elapsed = time.perf_counter() - start
    passed = n120 == 120 and formula_ok and elapsed < 1.0
    record_criterion(1, "interval count", passed, f"n=64,d=6 -> {n120}; formula d=1..8 ok={formula_ok}; {elapsed:.3f}s")
    assert passed


def test_02_sorted_values(record_criterion):
    rng = np.random.default_rng(2)
    bad = 0
    for _ in range(1000):
        m = int(rng.integers(1, 257))
        values = rng.normal(size=m) * rng.choice([1e-3, 1.0, 1e3])
        if not np.array_equal(interval_quantiles(values, v=1, mean_subtraction="none"), np.sort(values)):
            bad += 1
    record_criterion(2, "v=1 equals sorted values", bad == 0, f"{bad}/1000 mismatches (exact)")
    assert bad == 0


def test_03_quantile_oracle(record_criterion):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(10_000):
        m = int(rng.integers(1, 200))
        v = int(rng.integers(1, 33))
        values = rng.normal(size=m) * 10
        got = interval_quantiles(values, v=v, mean_subtraction="none")
        want = sorted_interp_quantiles(values, quantile_count(m, v))
        worst = max(worst, float(np.max(np.abs(got - want))))
    passed = worst <= 1e-12
    record_criterion(3, "quantile oracle", passed, f"max abs error {worst:.3g} over 10000 cases (tol 1e-12)")
    assert passed


def test_04_dft_oracle(record_criterion):
    rng = np.random.default_rng(4)
    lengths = list(rng.integers(1, 129, size=180)) + [1, 2, 3, 5, 7, 13, 31, 61, 97, 101, 113, 127, 128, 64, 17, 19, 23, 29, 37, 41]
    worst = 0.0
    for n in lengths:
        x = rng.normal(size=int(n))
        got, want = dft_magnitude(x), naive_dft_magnitude(x)
        scale = max(float(np.max(np.abs(want))), 1e-300)
        worst = max(worst, float(np.max(np.abs(got - want))) / scale)
    passed = len(lengths) == 200 and worst <= 1e-9
    record_criterion(4, "DFT oracle", passed, f"max relative error {worst:.3g} over {len(lengths)} series (tol 1e-9)")
    assert passed


@pytest.mark.slow
def test_05_scale_task(record_criterion):
    start = time.perf_counter()
    accs = [_default_accuracy(scale_task, s) for s in range(10)]
    elapsed = time.perf_counter() - start
    mean = float(np.mean(accs))
    passed = mean >= 0.95 and elapsed < 30
    record_criterion(5, "synthetic scale task", passed, f"mean accuracy {mean:.4f} (>= 0.95), {elapsed:.1f}s (< 30s)")
    assert passed


@pytest.mark.slow
def test_06_bump_task(record_criterion):
    start = time.perf_counter()
    accs = [_default_accuracy(bump_task, s) for s in range(10)]
    elapsed = time.perf_counter() - start
    mean = float(np.mean(accs))
    passed = mean >= 0.95 and elapsed < 30
    record_criterion(6, "synthetic location task", passed, f"mean accuracy {mean:.4f} (>= 0.95), {elapsed:.1f}s (< 30s)")
    assert passed


def test_07_forest_consistency(record_criterion):
    rng = np.random.default_rng(7)
    cases = []
    # continuous series with arbitrary labels
    for seed in range(3):
        X = rng.normal(size=(60, 40))
        cases.append((X, rng.integers(0, 3, size=60)))
    # coarse discrete series with many tied feature values
    X = rng.integers(0, 3, size=(80, 16)).astype(float)
    X = np.unique(X, axis=0)
    cases.append((X, rng.integers(0, 2, size=X.shape[0])))
    accs = []
    for X, y in cases:
        ds = LabeledDataset.from_raw(X, y.astype(str))
        model, _ = train(ds)
        accs.append(float(np.mean(model.predict(ds.X) == ds.y)))
    passed = all(a == 1.0 for a in accs)
    record_criterion(7, "forest training consistency", passed, "training accuracies " + ", ".join(f"{a:.4f}" for a in accs))
    assert passed


def test_08_thread_determinism(record_criterion, tmp_path):
    rng = np.random.default_rng(8)
    labels = np.array(["x", "y", "z"])[np.arange(90) % 3]
    X = rng.normal(size=(90, 64)) * (1 + 0.3 * (np.arange(90) % 3))[:, None]
    train_path, test_path = tmp_path / "D_TRAIN.tsv", tmp_path / "D_TEST.tsv"
    write_tsv_rows(train_path, X[:45], labels[:45])
    write_tsv_rows(test_path, X[45:], labels[45:])
    outs = {}
    for threads in (1, 8):
        for timing in (False, True):
            path = tmp_path / f"r{threads}{timing}.csv"
            args = ["eval", str(train_path), str(test_path), "-R", "3", "--seed", "11", "--threads", str(threads),
                    "--trees", "50", "-o", str(path)]
            assert main(args + ([] if timing else ["--no-timings"])) == 0
            outs[threads, timing] = path
    identical = outs[1, False].read_bytes() == outs[8, False].read_bytes()
    with open(outs[1, True]) as a, open(outs[8, True]) as b:
        same_acc = [r[:3] for r in csv.reader(a)] == [r[:3] for r in csv.reader(b)]
    passed = identical and same_acc
    record_criterion(8, "thread-count determinism", passed,
                     f"--no-timings CSV byte-identical={identical}; accuracy columns identical with timings={same_acc}")
    assert passed


def test_09_transform_speed(record_criterion):
    X = np.random.default_rng(9).normal(size=(1000, 512))
    t = fit(512)
    apply(t, X[:10])  # warm caches
    best = min(_timed(lambda: apply(t, X, threads=1)) for _ in range(3))
    passed = best <= 2.0
    record_criterion(9, "transform speed", passed, f"1000 x 512 in {best:.3f}s single-threaded (<= 2s), p={t.n_features}")
    assert passed


def _timed(fn):
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


@pytest.mark.slow
def test_10_fit_time_scaling(record_criterion):
    Xtr, ytr, _, _ = scale_task(0)
    times, widths = {}, {}
    for v in (4, 2):
        F = apply(fit(Xtr, TransformConfig(divisor=v)), Xtr).data
        widths[v] = F.shape[1]
        qforest.fit(F[:50], ytr[:50], qforest.TrainConfig(num_trees=2), n_classes=2)  # compile outside timing
        times[v] = min(_timed(lambda F=F: qforest.fit(F, ytr, qforest.TrainConfig(), n_classes=2)) for _ in range(3))
    ratio = times[2] / times[4]
    passed = 1.5 <= ratio <= 3.0
    record_criterion(10, "fit time scaling with p", passed,
                     f"p {widths[4]} -> {widths[2]}, fit {times[4]:.3f}s -> {times[2]:.3f}s, ratio {ratio:.2f} (in [1.5, 3.0])")
    assert passed


def _write_results(path, per_dataset, resamples=1):
    with open(path, "w") as fh:
        fh.write("dataset,resample,accuracy,train_seconds,test_seconds\n")
        for name, acc in per_dataset.items():
            fh.writelines(f"{name},{r},{acc!r},,\n" for r in range(resamples))


def test_11_wilcoxon_exact(record_criterion, tmp_path, capsys):
    base = {f"ds{i}": 0.5 + 0.03 * i for i in range(10)}
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    _write_results(a, {k: v + 0.01 for k, v in base.items()})
    _write_results(b, base)
    assert main(["compare", str(a), str(b)]) == 0
    out = capsys.readouterr().out
    p = float(out.split("p = ")[1].split()[0])
    wdl = "10/0/0" in out
    passed = abs(p - 2 / 2**10) <= 1e-6 and wdl
    record_criterion(11, "Wilcoxon exact p", passed, f"p={p:.8f} vs 2/2^10={2 / 2**10:.8f} (tol 1e-6); W/D/L 10/0/0={wdl}")
    assert passed


@pytest.mark.slow
def test_12_protocol_execution(record_criterion, tmp_path, capsys):
    rng = np.random.default_rng(12)
    archive = tmp_path / "archive"
    names = ["Gamma", "Delta", "Epsilon"]
    for i, name in enumerate(names):
        d = archive / name
        d.mkdir(parents=True)
        n = 24 + 8 * i
        for split, q in (("TRAIN", 20), ("TEST", 16)):
            labels = np.array(["1", "2"])[np.arange(q) % 2]
            X = rng.normal(size=(q, n)) * np.where(labels == "2", 1.4, 1.0)[:, None]
            write_tsv_rows(d / f"{name}_{split}.tsv", X, labels)
    ours = tmp_path / "ours.csv"
    assert main(["eval", "--archive", str(archive), "-R", "30", "--trees", "20", "-o", str(ours)]) == 0
    with open(ours) as fh:
        rows = list(csv.DictReader(fh))
    keys = {(r["dataset"], int(r["resample"])) for r in rows}
    complete = keys == {(nm, r) for nm in names for r in range(30)}
    in_range = all(0.0 <= float(r["accuracy"]) <= 1.0 for r in rows)
    published = tmp_path / "published.csv"
    with open(published, "w") as fh:
        fh.write("dataset,resample,accuracy,train_seconds,test_seconds\n")
        for nm in names:
            fh.writelines(f"{nm},{r},0.75,,\n" for r in range(30))
    capsys.readouterr()
    rc = main(["compare", str(ours), str(published), "--name-a", "QUANT", "--name-b", "published"])
    out = capsys.readouterr().out
    reported = rc == 0 and "win/draw/loss" in out and "p = " in out and "mean difference (QUANT - published)" in out
    passed = complete and in_range and reported
    record_criterion(12, "full protocol execution", passed,
                     f"{len(rows)} rows over {len(names)} datasets x 30 resamples (complete={complete}); compare report ok={reported}")
    assert passed
