import numpy as np
import pytest

from quant.core import LabeledDataset

ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    def record(number, title, passed, detail=""):
        ACCEPTANCE[number] = (title, bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:>2}. {title}: {detail}")


def scale_task(seed, n_train=500, n_test=500, length=128):
    """Class 0 ~ N(0, 1), class 1 ~ N(0, 1.5^2), i.i.d. per time step."""
    rng = np.random.default_rng(seed)
    q = n_train + n_test
    y = np.repeat([0, 1], q // 2)
    rng.shuffle(y)
    X = rng.normal(0.0, 1.0, (q, length)) * np.where(y == 1, 1.5, 1.0)[:, None]
    return X[:n_train], y[:n_train], X[n_train:], y[n_train:]


def bump_task(seed, n_train=500, n_test=500, length=128):
    """N(0, 1) noise plus a unit bump of width 8 centred at 32 (class 0) or 96 (class 1)."""
    rng = np.random.default_rng(seed)
    q = n_train + n_test
    y = np.repeat([0, 1], q // 2)
    rng.shuffle(y)
    X = rng.normal(0.0, 1.0, (q, length))
    centres = np.where(y == 0, 32, 96)
    for i, c in enumerate(centres):
        X[i, c - 4 : c + 4] += 1.0
    return X[:n_train], y[:n_train], X[n_train:], y[n_train:]


def toy_dataset(seed=0, q=40, n=32, classes=("a", "b"), name="Toy"):
    rng = np.random.default_rng(seed)
    y = np.arange(q) % len(classes)
    X = rng.normal(0.0, 1.0, (q, n)) * (1.0 + 0.5 * y[:, None])
    return LabeledDataset(X, y, tuple(classes), name)


def write_tsv_rows(path, X, labels):
    with open(path, "w") as fh:
        fh.writelines(str(label) + "\t" + "\t".join(repr(float(v)) for v in row) + "\n" for label, row in zip(labels, X))
