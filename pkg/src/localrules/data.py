"""Tabular data handling: feature schemas, CSV loading, imputation and splitting.

Instances are kept in an encoded numeric form throughout the package: one
float per feature, where a categorical feature stores the index of its value
in the schema's ``values`` list and a continuous feature stores the number
itself. Missing cells are ``nan``. ``FeatureSchema.encode`` / ``decode``
convert between this form and plain ``{name: value}`` dicts.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError, NonBinaryTargetError, SchemaError

CATEGORICAL = "categorical"
CONTINUOUS = "continuous"

MISSING_MARKERS = frozenset({"", "?", "na", "nan", "null"})

Instance = dict  # {feature name: str | float}


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str
    values: tuple[str, ...] = ()
    min: float = 0.0
    max: float = 0.0
    # categorical: frequency per value (aligned with ``values``);
    # continuous: sorted multiset of observed numbers.
    empirical: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind == CATEGORICAL:
            if not self.values:
                raise SchemaError(f"categorical feature {self.name!r} has no values", self.name)
            if len(set(self.values)) != len(self.values):
                raise SchemaError(f"duplicate values for feature {self.name!r}", self.name)
        elif self.kind == CONTINUOUS:
            if not self.min <= self.max:
                raise SchemaError(f"feature {self.name!r}: min > max", self.name)
        else:
            raise SchemaError(f"feature {self.name!r}: unknown kind {self.kind!r}", self.name)

    @property
    def is_categorical(self) -> bool:
        return self.kind == CATEGORICAL

    @property
    def range(self) -> float:
        return float(self.max - self.min) if self.kind == CONTINUOUS else 0.0

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw ``size`` encoded values from the empirical distribution."""
        if self.empirical is None:
            raise DataError(f"no empirical distribution for feature {self.name!r}")
        if self.is_categorical:
            return rng.choice(len(self.values), size=size, p=self.empirical).astype(float)
        return rng.choice(self.empirical, size=size)


@dataclass(frozen=True)
class FeatureSchema:
    features: tuple[FeatureSpec, ...]
    target: str
    labels: tuple[str, str]

    def __post_init__(self):
        names = [f.name for f in self.features]
        seen = set()
        for n in names:
            if n in seen:
                raise SchemaError(f"duplicate feature name {n!r}", n)
            seen.add(n)
        if self.target in seen:
            raise SchemaError(f"target {self.target!r} is also a feature", self.target)
        if len(self.labels) != 2 or self.labels[0] == self.labels[1]:
            raise NonBinaryTargetError(
                f"target {self.target!r} must have exactly two labels, got {list(self.labels)}",
                self.target,
            )

    @property
    def names(self) -> list[str]:
        return [f.name for f in self.features]

    @property
    def m(self) -> int:
        return len(self.features)

    @property
    def categorical_mask(self) -> np.ndarray:
        return np.array([f.is_categorical for f in self.features], dtype=bool)

    @property
    def ranges(self) -> np.ndarray:
        return np.array([f.range for f in self.features], dtype=float)

    @property
    def has_empirical(self) -> bool:
        return all(f.empirical is not None for f in self.features)

    def index(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise SchemaError(f"unknown feature {name!r}", name)

    def feature(self, name: str) -> FeatureSpec:
        return self.features[self.index(name)]

    def label_index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise NonBinaryTargetError(
                f"label {label!r} is not one of {list(self.labels)}", self.target
            ) from None

    def encode_value(self, spec: FeatureSpec, value: Any) -> float:
        if spec.is_categorical:
            try:
                return float(spec.values.index(str(value)))
            except ValueError:
                raise SchemaError(
                    f"value {value!r} not allowed for feature {spec.name!r}", spec.name
                ) from None
        try:
            v = float(value)
        except (TypeError, ValueError):
            raise SchemaError(f"non-numeric value {value!r} for feature {spec.name!r}", spec.name) from None
        if math.isnan(v):
            raise SchemaError(f"missing value for feature {spec.name!r}", spec.name)
        return v

    def encode(self, instance: Mapping[str, Any] | Sequence[Any]) -> np.ndarray:
        """Encode a ``{name: value}`` mapping or a value sequence in column order."""
        if isinstance(instance, Mapping):
            missing = [n for n in self.names if n not in instance]
            if missing:
                raise SchemaError(f"instance lacks feature {missing[0]!r}", missing[0])
            values = [instance[n] for n in self.names]
        else:
            values = list(instance)
            if len(values) != self.m:
                raise SchemaError(f"instance has {len(values)} values, schema has {self.m}")
        return np.array([self.encode_value(f, v) for f, v in zip(self.features, values)], dtype=float)

    def encode_many(self, instances: Iterable[Mapping[str, Any] | Sequence[Any]]) -> np.ndarray:
        rows = [self.encode(x) for x in instances]
        if not rows:
            return np.empty((0, self.m))
        return np.vstack(rows)

    def decode(self, row: np.ndarray) -> Instance:
        out = {}
        for f, v in zip(self.features, row):
            if f.is_categorical:
                out[f.name] = f.values[int(v)]
            else:
                out[f.name] = _plain_number(v)
        return out

    def decode_value(self, j: int, v: float) -> str | float:
        f = self.features[j]
        return f.values[int(v)] if f.is_categorical else _plain_number(v)

    def validate_rows(self, X: np.ndarray) -> None:
        """Raise ``SchemaError`` if any encoded row is outside the feature space."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.m:
            raise SchemaError(f"expected rows of arity {self.m}, got shape {X.shape}")
        for j, f in enumerate(self.features):
            col = X[:, j]
            if np.isnan(col).any():
                raise SchemaError(f"missing value in feature {f.name!r}", f.name)
            if f.is_categorical:
                ok = (col >= 0) & (col < len(f.values)) & (col == np.floor(col))
                if not ok.all():
                    raise SchemaError(f"invalid category code in feature {f.name!r}", f.name)

    def to_dict(self) -> dict:
        feats = []
        for f in self.features:
            if f.is_categorical:
                feats.append({"name": f.name, "kind": f.kind, "values": list(f.values)})
            else:
                feats.append({"name": f.name, "kind": f.kind, "min": f.min, "max": f.max})
        return {"features": feats, "target": {"name": self.target, "labels": list(self.labels)}}

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> FeatureSchema:
        try:
            raw_features = doc["features"]
            target = doc["target"]
            target_name = target["name"]
            labels = tuple(str(lab) for lab in target["labels"])
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"malformed schema document: missing {exc}") from None
        feats = []
        for raw in raw_features:
            name = raw.get("name")
            kind = raw.get("kind")
            if not name:
                raise SchemaError("feature without a name")
            if kind == CATEGORICAL:
                feats.append(FeatureSpec(name, kind, values=tuple(str(v) for v in raw.get("values", ()))))
            elif kind == CONTINUOUS:
                if "min" not in raw or "max" not in raw:
                    raise SchemaError(f"continuous feature {name!r} needs min and max", name)
                feats.append(FeatureSpec(name, kind, min=float(raw["min"]), max=float(raw["max"])))
            else:
                raise SchemaError(f"feature {name!r}: unknown kind {kind!r}", name)
        return cls(tuple(feats), str(target_name), labels)  # type: ignore[arg-type]


def _plain_number(v: float) -> float | int:
    v = float(v)
    return int(v) if v.is_integer() and abs(v) < 2**53 else v


def load_schema(path: str | Path) -> FeatureSchema:
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    return FeatureSchema.from_dict(doc)


@dataclass(frozen=True)
class Dataset:
    """Encoded rows plus labels (index into ``schema.labels``; -1 when absent)."""

    schema: FeatureSchema
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        if self.X.shape != (len(self.y), self.schema.m):
            raise DataError(f"row array shape {self.X.shape} does not match labels/schema")
        self.X.setflags(write=False)
        self.y.setflags(write=False)

    def __len__(self) -> int:
        return len(self.y)

    @property
    def is_labeled(self) -> bool:
        return bool((self.y >= 0).all())

    @property
    def has_missing(self) -> bool:
        return bool(np.isnan(self.X).any())

    def instance(self, i: int) -> Instance:
        return self.schema.decode(self.X[i])

    def subset(self, idx: Sequence[int] | np.ndarray) -> Dataset:
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.schema, self.X[idx].copy(), self.y[idx].copy())


def load_dataset(csv_path: str | Path, schema_path: str | Path | FeatureSchema) -> Dataset:
    """Read an RFC-4180 CSV whose header names every schema feature plus the target."""
    schema = schema_path if isinstance(schema_path, FeatureSchema) else load_schema(schema_path)
    with open(csv_path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{csv_path}: missing header row") from None
        expected = schema.names + [schema.target]
        for col in expected:
            if col not in header:
                raise SchemaError(f"{csv_path}: column {col!r} missing from CSV header", col)
        for col in header:
            if col not in expected:
                raise SchemaError(f"{csv_path}: unexpected column {col!r}", col)
        if len(set(header)) != len(header):
            dup = next(h for h in header if header.count(h) > 1)
            raise SchemaError(f"{csv_path}: duplicate column {dup!r}", dup)
        pos = [header.index(n) for n in schema.names]
        tpos = header.index(schema.target)

        rows, labels = [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != len(header):
                raise SchemaError(f"{csv_path}:{lineno}: expected {len(header)} cells, got {len(rec)}")
            rows.append([_parse_cell(schema.features[j], rec[p]) for j, p in enumerate(pos)])
            raw_label = rec[tpos].strip()
            if raw_label.lower() in MISSING_MARKERS:
                labels.append(-1)
            elif raw_label in schema.labels:
                labels.append(schema.labels.index(raw_label))
            else:
                raise NonBinaryTargetError(
                    f"{csv_path}:{lineno}: target label {raw_label!r} is not one of "
                    f"{list(schema.labels)}",
                    schema.target,
                )
    X = np.array(rows, dtype=float).reshape(len(rows), schema.m)
    return Dataset(schema, X, np.array(labels, dtype=int))


def _parse_cell(spec: FeatureSpec, cell: str) -> float:
    text = cell.strip()
    if spec.is_categorical and text in spec.values:
        return float(spec.values.index(text))
    if text.lower() in MISSING_MARKERS:
        return math.nan
    if spec.is_categorical:
        raise SchemaError(f"value {text!r} not allowed for feature {spec.name!r}", spec.name)
    try:
        return float(text)
    except ValueError:
        return math.nan


def impute_missing(ds: Dataset) -> Dataset:
    """Mean for continuous columns, mode for categorical ones (ties: schema order)."""
    X = ds.X.copy()
    for j, f in enumerate(ds.schema.features):
        col = X[:, j]
        miss = np.isnan(col)
        if not miss.any():
            continue
        present = col[~miss]
        if present.size == 0:
            raise DataError(f"column {f.name!r} has no values to impute from")
        if f.is_categorical:
            counts = np.bincount(present.astype(int), minlength=len(f.values))
            fill = float(np.argmax(counts))  # argmax returns the first maximum
        else:
            fill = float(present.mean())
        col[miss] = fill
    return Dataset(ds.schema, X, ds.y.copy())


def train_test_split(ds: Dataset, train_frac: float = 0.8, seed: int = 0) -> tuple[Dataset, Dataset]:
    if not 0.0 < train_frac < 1.0:
        raise ValueError(f"train_frac must lie in (0, 1), got {train_frac}")
    n = len(ds)
    n_train = int(math.floor(n * train_frac + 0.5))
    perm = np.random.default_rng(seed).permutation(n)
    return ds.subset(np.sort(perm[:n_train])), ds.subset(np.sort(perm[n_train:]))


def build_empirical_distributions(ds: Dataset) -> FeatureSchema:
    """Attach per-feature samplers estimated from ``ds`` to a copy of its schema."""
    if len(ds) == 0:
        raise DataError("cannot build empirical distributions from an empty dataset")
    if ds.has_missing:
        raise DataError("impute missing values before building empirical distributions")
    feats = []
    for j, f in enumerate(ds.schema.features):
        col = ds.X[:, j]
        if f.is_categorical:
            counts = np.bincount(col.astype(int), minlength=len(f.values)).astype(float)
            emp = counts / counts.sum()
        else:
            emp = np.sort(col)
        emp.setflags(write=False)
        feats.append(replace(f, empirical=emp))
    return replace(ds.schema, features=tuple(feats))
