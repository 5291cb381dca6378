"""Trained pipeline (transform + forest) and its binary file format.

File layout, all integers little-endian::

    offset  size  field
    0       4     magic b"QNT1"
    4       4     u32 format version (currently 1)
    8       8     u64 payload length L
    16      4     u32 CRC-32 (zlib polynomial) of the payload
    20      L     payload

Payload::

    u32 M, then M bytes of UTF-8 JSON metadata (sorted keys): transform and
        training configuration, series length n, class names, feature
        count p, class count C, tree count T
    p column records of 17 bytes: i32 representation, i32 start, i32 end,
        i32 quantile index, u8 mean-subtracted flag
    T trees, each: u32 node count N, then
        i32 feature[N], f64 threshold[N], i32 left[N], i32 right[N],
        f64 class counts[N * C] (row major)

A node with ``left == -1`` is a leaf. Rows go left when
``x[feature] <= threshold``.
"""

from __future__ import annotations

import io
import json
import struct
import time
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import forest as forest_mod
from . import transform as transform_mod
from .core import COLUMN_DTYPE, DataError, LabeledDataset, QuantError
from .forest import Forest, TrainConfig, Tree
from .transform import FittedTransform, TransformConfig

MAGIC = b"QNT1"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQI")


class ModelFormatError(QuantError):
    pass


@dataclass(frozen=True, eq=False)
class Model:
    transform: FittedTransform
    forest: Forest
    class_names: tuple[str, ...]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.transform.n_features != self.forest.n_features:
            raise ModelFormatError(
                f"transform produces {self.transform.n_features} features but the forest expects {self.forest.n_features}"
            )
        if len(self.class_names) != self.forest.n_classes:
            raise ModelFormatError("class name table does not match the forest's class count")

    @property
    def n(self) -> int:
        return self.transform.n

    def _features(self, X, threads):
        X = np.asarray(getattr(X, "X", X), dtype=np.float64)
        if X.ndim == 2 and X.shape[1] != self.n:
            raise DataError(f"model expects series of length {self.n}, data has length {X.shape[1]}")
        return self.transform.transform(X, threads=threads)

    def predict_proba(self, X, threads: int = 1) -> np.ndarray:
        return self.forest.predict_proba(self._features(X, threads), threads=threads)

    def predict(self, X, threads: int = 1) -> np.ndarray:
        return np.argmax(self.predict_proba(X, threads), axis=1)

    def predict_labels(self, X, threads: int = 1) -> list[str]:
        return [self.class_names[i] for i in self.predict(X, threads)]


@dataclass
class Timings:
    transform_seconds: float = 0.0
    classifier_seconds: float = 0.0

    @property
    def total(self) -> float:
        return self.transform_seconds + self.classifier_seconds


def train(
    dataset: LabeledDataset,
    transform_config: TransformConfig | None = None,
    train_config: TrainConfig | None = None,
    threads: int = 1,
) -> tuple[Model, Timings]:
    """Fit the transform and the forest on ``dataset``."""
    transform_config = transform_config or TransformConfig()
    train_config = train_config or TrainConfig()
    dataset.check_all_classes_present()
    timings = Timings()

    start = time.perf_counter()
    fitted = transform_mod.fit(dataset, transform_config)
    features = fitted.transform(dataset.X, threads=threads)
    timings.transform_seconds = time.perf_counter() - start

    start = time.perf_counter()
    trained = forest_mod.fit(features, dataset.y, train_config, n_classes=dataset.n_classes, threads=threads)
    timings.classifier_seconds = time.perf_counter() - start

    meta = {"seed": int(train_config.seed)}
    return Model(fitted, trained, dataset.class_names, meta), timings


def dumps(model: Model) -> bytes:
    f = model.forest
    meta = {
        "transform": model.transform.config.to_dict(),
        "train": f.config.to_dict(),
        "n": model.transform.n,
        "class_names": list(model.class_names),
        "n_features": f.n_features,
        "n_classes": f.n_classes,
        "num_trees": len(f.trees),
        "metadata": model.metadata,
    }
    buf = io.BytesIO()
    meta_bytes = json.dumps(meta, sort_keys=True, separators=(",", ":")).encode("utf-8")
    buf.write(struct.pack("<I", len(meta_bytes)))
    buf.write(meta_bytes)
    buf.write(np.ascontiguousarray(model.transform.schema, dtype=COLUMN_DTYPE).tobytes())
    for t in f.trees:
        buf.write(struct.pack("<I", t.n_nodes))
        buf.write(t.feature.astype("<i4").tobytes())
        buf.write(t.threshold.astype("<f8").tobytes())
        buf.write(t.left.astype("<i4").tobytes())
        buf.write(t.right.astype("<i4").tobytes())
        buf.write(t.counts.astype("<f8").tobytes())
    payload = buf.getvalue()
    return _HEADER.pack(MAGIC, FORMAT_VERSION, len(payload), zlib.crc32(payload)) + payload


class _Reader:
    def __init__(self, data: bytes):
        self.data = memoryview(data)
        self.pos = 0

    def take(self, size: int) -> memoryview:
        if self.pos + size > len(self.data):
            raise ModelFormatError("model payload ends unexpectedly")
        out = self.data[self.pos : self.pos + size]
        self.pos += size
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def array(self, dtype, count) -> np.ndarray:
        dtype = np.dtype(dtype)
        return np.frombuffer(self.take(dtype.itemsize * count), dtype=dtype, count=count).copy()


def loads(data: bytes) -> Model:
    if len(data) < _HEADER.size:
        raise ModelFormatError("file is too short to be a model (truncated header)")
    magic, version, length, crc = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ModelFormatError("not a model file (bad magic bytes)")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version} (this build reads version {FORMAT_VERSION})")
    payload = data[_HEADER.size :]
    if len(payload) < length:
        raise ModelFormatError(f"truncated model file: expected {length} payload bytes, found {len(payload)}")
    if len(payload) > length:
        raise ModelFormatError("trailing bytes after model payload")
    if zlib.crc32(payload) != crc:
        raise ModelFormatError("model checksum mismatch (file is corrupted)")

    r = _Reader(payload)
    try:
        meta = json.loads(bytes(r.take(r.u32())).decode("utf-8"))
        tconf = TransformConfig.from_dict(meta["transform"])
        fconf = TrainConfig.from_dict(meta["train"])
        n, p, C, T = meta["n"], meta["n_features"], meta["n_classes"], meta["num_trees"]
        class_names = tuple(meta["class_names"])
    except (KeyError, TypeError, ValueError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"malformed model metadata: {exc}") from None

    schema = r.array(COLUMN_DTYPE, p)
    fitted = transform_mod.fit(n, tconf)
    if not transform_mod.schema_equal(fitted.schema, schema):
        raise ModelFormatError("stored feature layout does not match the stored transform configuration")

    trees = []
    for _ in range(T):
        nodes = r.u32()
        feature = r.array("<i4", nodes).astype(np.int32)
        threshold = r.array("<f8", nodes).astype(np.float64)
        left = r.array("<i4", nodes).astype(np.int32)
        right = r.array("<i4", nodes).astype(np.int32)
        counts = r.array("<f8", nodes * C).astype(np.float64).reshape(nodes, C)
        internal = left >= 0
        if nodes < 1 or np.any(feature[internal] >= p) or np.any(left >= nodes) or np.any(right >= nodes):
            raise ModelFormatError("malformed tree structure")
        trees.append(Tree(feature, threshold, left, right, counts))
    if r.pos != len(payload):
        raise ModelFormatError("unexpected bytes after the last tree")
    forest = Forest(tuple(trees), n_classes=C, n_features=p, config=fconf)
    return Model(fitted, forest, class_names, meta.get("metadata", {}))


def save_model(model: Model, path):
    with open(path, "wb") as fh:
        fh.write(dumps(model))


def load_model(path) -> Model:
    with open(path, "rb") as fh:
        return loads(fh.read())
