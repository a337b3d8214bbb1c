"""Binary labelled datasets, KEEL/CSV readers and the min-max scaler.

Labels are stored as integers: ``MAJORITY`` (0) for the larger class and
``MINORITY`` (1) for the smaller one. The minority class is the positive
class everywhere downstream.
"""
import csv
import io
import logging
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

MAJORITY = 0
MINORITY = 1

_MISSING = {"?", "<null>", ""}


class DatasetError(ValueError):
    """Raised for malformed or unusable dataset files."""


@dataclass(frozen=True)
class LabeledDataset:
    X: np.ndarray
    y: np.ndarray
    name: str = "dataset"
    class_names: tuple = ("majority", "minority")
    feature_names: tuple = ()
    relabeled: bool = False
    dropped_rows: int = 0

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=int)
        if X.ndim != 2:
            raise DatasetError(f"features must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DatasetError("label count does not match row count")
        if not np.all(np.isfinite(X)):
            raise DatasetError("features contain non-finite values")
        if not set(np.unique(y)) <= {MAJORITY, MINORITY}:
            raise DatasetError("labels must be 0 (majority) or 1 (minority)")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        if not self.feature_names:
            names = tuple(f"f{j}" for j in range(X.shape[1]))
            object.__setattr__(self, "feature_names", names)

    @property
    def n_samples(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]

    @property
    def imbalance_ratio(self):
        n_min = int((self.y == MINORITY).sum())
        return (self.n_samples - n_min) / n_min if n_min else float("inf")

    def subset(self, rows):
        rows = np.asarray(rows)
        return replace(self, X=self.X[rows], y=self.y[rows])

    def summary(self):
        return DatasetSummary(self.name, self.n_samples, self.n_features,
                              self.imbalance_ratio)


@dataclass(frozen=True)
class DatasetSummary:
    name: str
    instances: int
    features: int
    imbalance_ratio: float

    def as_row(self):
        return {"name": self.name, "instances": self.instances,
                "features": self.features, "IR": round(self.imbalance_ratio, 2)}


def from_raw_labels(X, raw_labels, name="dataset", feature_names=(),
                    positive=None, dropped_rows=0):
    """Build a dataset from arbitrary binary labels.

    The larger class becomes the majority. ``positive`` names the class the
    source file declared as minority (KEEL's ``positive``); if it turns out to
    be the larger class the dataset is flagged as relabelled.
    """
    raw = np.asarray([str(v) for v in raw_labels])
    classes, counts = np.unique(raw, return_counts=True)
    if classes.size != 2:
        raise DatasetError(f"{name}: expected exactly 2 classes, found {classes.size}")
    if counts[0] == counts[1]:
        if positive is not None and positive in classes:
            minority = positive
        else:
            minority = classes[1]
    else:
        minority = classes[int(np.argmin(counts))]
    majority = classes[0] if classes[1] == minority else classes[1]
    relabeled = positive is not None and positive in classes and positive != minority
    if relabeled:
        log.warning("%s: declared positive class %r is the larger class; relabelled",
                    name, positive)
    y = (raw == minority).astype(int)
    return LabeledDataset(X=np.asarray(X, dtype=float), y=y, name=name,
                          class_names=(str(majority), str(minority)),
                          feature_names=tuple(feature_names), relabeled=relabeled,
                          dropped_rows=dropped_rows)


_ATTR_RE = re.compile(r"@attribute\s+('[^']*'|\S+)\s*(.*)$", re.IGNORECASE)


def _parse_attribute(line, lineno):
    m = _ATTR_RE.match(line)
    if not m:
        raise DatasetError(f"line {lineno}: malformed @attribute declaration")
    name = m.group(1).strip("'")
    rest = m.group(2).strip()
    if rest.startswith("{"):
        if not rest.endswith("}"):
            raise DatasetError(f"line {lineno}: unterminated nominal value list")
        values = [v.strip().strip("'") for v in rest[1:-1].split(",")]
        return name, "nominal", values
    kind = rest.split()[0].lower() if rest else ""
    if kind not in ("real", "integer", "numeric"):
        raise DatasetError(f"line {lineno}: unsupported attribute type {rest!r}")
    return name, "numeric", None


def parse_keel(path, name=None):
    """Read a KEEL ``.dat`` file.

    Nominal input attributes are coded by their declaration order. The class
    attribute is the ``@outputs`` attribute, or the last one declared. Rows
    with missing values are dropped with a warning.
    """
    path = Path(path)
    name = name or path.stem
    attrs = []
    outputs = None
    data_start = None
    lines = path.read_text().splitlines()
    for i, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        low = line.lower()
        if low.startswith("@relation"):
            continue
        if low.startswith("@attribute"):
            attrs.append(_parse_attribute(line, i))
        elif low.startswith("@inputs"):
            continue
        elif low.startswith("@outputs") or low.startswith("@output"):
            outputs = line.split(None, 1)[1].strip() if len(line.split(None, 1)) > 1 else None
        elif low.startswith("@data"):
            data_start = i
            break
        else:
            raise DatasetError(f"{path}: line {i}: unexpected header line {line[:40]!r}")
    if data_start is None:
        raise DatasetError(f"{path}: missing @data section")
    if len(attrs) < 2:
        raise DatasetError(f"{path}: need at least one feature and a class attribute")
    names = [a[0] for a in attrs]
    cls = names.index(outputs) if outputs in names else len(attrs) - 1
    if outputs is not None and outputs not in names:
        raise DatasetError(f"{path}: @outputs names unknown attribute {outputs!r}")
    feat_idx = [j for j in range(len(attrs)) if j != cls]

    rows, labels, dropped = [], [], 0
    for i in range(data_start, len(lines)):
        line = lines[i].strip()
        lineno = i + 1
        if not line or line.startswith("%"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) != len(attrs):
            raise DatasetError(f"{path}: line {lineno}: expected {len(attrs)} fields, "
                               f"got {len(fields)}")
        if any(f in _MISSING for f in fields):
            dropped += 1
            continue
        row = []
        for j in feat_idx:
            _, kind, values = attrs[j]
            v = fields[j]
            if kind == "nominal":
                if v not in values:
                    raise DatasetError(f"{path}: line {lineno}: value {v!r} not declared "
                                       f"for attribute {attrs[j][0]!r}")
                row.append(float(values.index(v)))
            else:
                try:
                    row.append(float(v))
                except ValueError:
                    raise DatasetError(f"{path}: line {lineno}: non-numeric value {v!r} "
                                       f"for attribute {attrs[j][0]!r}") from None
        rows.append(row)
        labels.append(fields[cls])
    if dropped:
        log.warning("%s: dropped %d rows with missing values", name, dropped)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    if len(set(labels)) < 2:
        raise DatasetError(f"{path}: file contains a single class")
    class_values = attrs[cls][2] or []
    positive = "positive" if "positive" in class_values else None
    return from_raw_labels(np.array(rows), labels, name=name,
                           feature_names=[names[j] for j in feat_idx],
                           positive=positive, dropped_rows=dropped)


def parse_csv(path, label_column=None, name=None):
    """Read a CSV file with a header row; ``label_column`` defaults to the last."""
    path = Path(path)
    name = name or path.stem
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"{path}: empty file") from None
        if len(set(header)) != len(header):
            dupes = sorted({h for h in header if header.count(h) > 1})
            raise DatasetError(f"{path}: duplicate header names {dupes}")
        label_column = header[-1] if label_column is None else label_column
        if label_column not in header:
            raise DatasetError(f"{path}: label column {label_column!r} not in header")
        cls = header.index(label_column)
        rows, labels, dropped = [], [], 0
        for lineno, fields in enumerate(reader, 2):
            if not fields or all(not f.strip() for f in fields):
                continue
            if len(fields) != len(header):
                raise DatasetError(f"{path}: line {lineno}: expected {len(header)} fields, "
                                   f"got {len(fields)}")
            fields = [f.strip() for f in fields]
            if any(f in _MISSING for f in fields):
                dropped += 1
                continue
            row = []
            for j, v in enumerate(fields):
                if j == cls:
                    continue
                try:
                    row.append(float(v))
                except ValueError:
                    raise DatasetError(f"{path}: line {lineno}: non-numeric value {v!r} "
                                       f"in column {header[j]!r}") from None
            rows.append(row)
            labels.append(fields[cls])
    if dropped:
        log.warning("%s: dropped %d rows with missing values", name, dropped)
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    if len(set(labels)) < 2:
        raise DatasetError(f"{path}: file contains a single class")
    return from_raw_labels(np.array(rows), labels, name=name,
                           feature_names=[h for j, h in enumerate(header) if j != cls])


def to_csv(dataset, path=None, label_column="class"):
    """Write the canonical CSV form (features then class name); returns the text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(dataset.feature_names) + [label_column])
    for row, label in zip(dataset.X, dataset.y):
        writer.writerow([repr(float(v)) for v in row] + [dataset.class_names[label]])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def load_dataset(path, label_column=None):
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return parse_csv(path, label_column=label_column)
    return parse_keel(path)


@dataclass
class MinMaxScaler:
    """Per-feature min-max scaling to [0, 1]; constant features map to 0."""

    lo: np.ndarray = field(default=None)
    span: np.ndarray = field(default=None)

    def fit(self, X):
        X = np.asarray(X, dtype=float)
        self.lo = X.min(axis=0)
        span = X.max(axis=0) - self.lo
        span[span == 0] = 1.0
        self.span = span
        return self

    def transform(self, X):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.lo.shape[0]:
            raise ValueError(f"expected {self.lo.shape[0]} features, got shape {X.shape}")
        return (X - self.lo) / self.span

    def fit_transform(self, X):
        return self.fit(X).transform(X)
