"""Mixed-type distances in [0, 1] between encoded instances.

``neuclid`` is the default: a weighted sum of the categorical mismatch rate
and a range-normalized Euclidean distance over continuous features, weighted
by the share of each feature type. ``cosine`` and ``minmax`` are alternates.
"""

from __future__ import annotations

import numpy as np

from .data import FeatureSchema
from .errors import SchemaError

NEUCLID = "neuclid"
COSINE = "cosine"
MINMAX = "minmax"
KINDS = (NEUCLID, COSINE, MINMAX)


def distance(kind: str, schema: FeatureSchema, x: np.ndarray, z: np.ndarray) -> float | np.ndarray:
    """Distance from ``x`` to ``z``; ``z`` may be one row or an (n, m) batch."""
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    Z = np.atleast_2d(z)
    if x.shape != (schema.m,) or Z.shape[1] != schema.m:
        raise SchemaError(f"instances do not match schema arity {schema.m}")
    try:
        fn = _KIND_FUNCS[kind]
    except KeyError:
        raise ValueError(f"unknown distance kind {kind!r}; expected one of {KINDS}") from None
    d = fn(schema, x, Z)
    return float(d[0]) if single else d


def _scaled_gaps(schema: FeatureSchema, x: np.ndarray, Z: np.ndarray, cont: np.ndarray) -> np.ndarray:
    ranges = schema.ranges[cont]
    gaps = np.abs(Z[:, cont] - x[cont])
    safe = np.where(ranges > 0, ranges, 1.0)
    # zero-range features contribute nothing
    return np.where(ranges > 0, gaps / safe, 0.0)


def _neuclid(schema: FeatureSchema, x: np.ndarray, Z: np.ndarray) -> np.ndarray:
    cat = schema.categorical_mask
    cont = ~cat
    m, h = schema.m, int(cat.sum())
    out = np.zeros(len(Z))
    if h:
        mismatch = (Z[:, cat] != x[cat]).sum(axis=1) / h
        out += (h / m) * mismatch
    if m - h:
        scaled = _scaled_gaps(schema, x, Z, cont)
        ne = np.sqrt((scaled**2).sum(axis=1) / (m - h))
        out += ((m - h) / m) * np.clip(ne, 0.0, 1.0)
    return out


def _minmax(schema: FeatureSchema, x: np.ndarray, Z: np.ndarray) -> np.ndarray:
    cat = schema.categorical_mask
    cont = ~cat
    total = (Z[:, cat] != x[cat]).sum(axis=1).astype(float)
    if cont.any():
        total += np.clip(_scaled_gaps(schema, x, Z, cont), 0.0, 1.0).sum(axis=1)
    return total / schema.m


def _one_hot(schema: FeatureSchema, X: np.ndarray) -> np.ndarray:
    blocks = []
    for j, f in enumerate(schema.features):
        col = X[:, j]
        if f.is_categorical:
            blocks.append(np.eye(len(f.values))[col.astype(int)])
        else:
            r = f.range
            scaled = (col - f.min) / r if r > 0 else np.zeros_like(col)
            blocks.append(np.clip(scaled, 0.0, 1.0)[:, None])
    return np.hstack(blocks)


def _cosine(schema: FeatureSchema, x: np.ndarray, Z: np.ndarray) -> np.ndarray:
    ex = _one_hot(schema, x[None, :])[0]
    EZ = _one_hot(schema, Z)
    nx = np.linalg.norm(ex)
    nz = np.linalg.norm(EZ, axis=1)
    denom = nx * nz
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = (EZ @ ex) / denom
    # both encodings non-negative, so 1 - cos already lies in [0, 1]
    d = np.clip(1.0 - cos, 0.0, 1.0)
    degenerate = denom == 0
    if degenerate.any():
        same = np.all(EZ[degenerate] == ex, axis=1)
        d[degenerate] = np.where(same, 0.0, 1.0)
    d[np.all(Z == x, axis=1)] = 0.0
    return d


_KIND_FUNCS = {NEUCLID: _neuclid, COSINE: _cosine, MINMAX: _minmax}
