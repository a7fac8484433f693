"""Alternative neighborhoods the genetic generator is compared against.

crn     the k test instances closest to x
rnd     crn plus feature-wise random draws until both classes reach N/2
ros     rnd, then the minority class resampled with replacement up to parity
global  the whole test set; one surrogate shared by every explained instance
"""

from __future__ import annotations

import numpy as np

from .blackbox import BlackBox
from .data import FeatureSchema
from .distance import NEUCLID, distance
from .genetic import Neighborhood, make_neighborhood

METHODS = ("lore", "crn", "rnd", "ros", "global")

# rnd gives up after this many random draws per requested instance
DRAW_CAP_FACTOR = 50


def _bx(bb: BlackBox, x: np.ndarray) -> int:
    return int(bb.predict(np.asarray(x, dtype=float)[None, :])[0])


def gen_crn(x, X: np.ndarray, bb: BlackBox, schema: FeatureSchema, k: int = 100,
            distance_kind: str = NEUCLID) -> Neighborhood:
    x = np.asarray(x, dtype=float)
    d = distance(distance_kind, schema, x, X)
    idx = np.argsort(d, kind="stable")[:k]
    Z = X[idx]
    return make_neighborhood(Z, bb.predict(Z), "crn", x, _bx(bb, x), schema, distance_kind)


def random_instances(schema: FeatureSchema, n: int, rng: np.random.Generator) -> np.ndarray:
    return np.column_stack([f.sample(rng, n) for f in schema.features]) if n else np.empty((0, schema.m))


def gen_rnd(x, X: np.ndarray, bb: BlackBox, schema: FeatureSchema, N: int = 1000, seed: int = 0,
            k: int = 100, distance_kind: str = NEUCLID) -> Neighborhood:
    x = np.asarray(x, dtype=float)
    rng = np.random.default_rng(seed)
    base = gen_crn(x, X, bb, schema, k, distance_kind)
    target = N // 2
    parts_X, parts_y = [base.X], [base.y]
    counts = np.bincount(base.y, minlength=2)
    drawn = 0
    cap = DRAW_CAP_FACTOR * N
    while (counts < target).any() and drawn < cap:
        batch = random_instances(schema, min(N, cap - drawn), rng)
        drawn += len(batch)
        yb = bb.predict(batch)
        for label in (0, 1):
            need = target - counts[label]
            if need <= 0:
                continue
            take = np.flatnonzero(yb == label)[:need]
            parts_X.append(batch[take])
            parts_y.append(yb[take])
            counts[label] += len(take)
    warnings = []
    if (counts < target).any():
        warnings.append(f"stratification cap of {cap} draws reached; class counts {counts.tolist()}")
    return make_neighborhood(np.vstack(parts_X), np.concatenate(parts_y), "rnd", x, base.bx, schema,
                             distance_kind, warnings)


def oversample(Z: Neighborhood, rng: np.random.Generator, schema: FeatureSchema,
               distance_kind: str = NEUCLID) -> Neighborhood:
    counts = np.bincount(Z.y, minlength=2)
    if counts.min() == 0 or counts[0] == counts[1]:
        warnings = list(Z.warnings)
        if counts.min() == 0:
            warnings.append("one class absent; nothing to oversample")
        return make_neighborhood(Z.X, Z.y, "ros", Z.x, Z.bx, schema, distance_kind, warnings)
    minority = int(np.argmin(counts))
    pool = np.flatnonzero(Z.y == minority)
    extra = rng.choice(pool, size=int(counts.max() - counts.min()), replace=True)
    X = np.vstack([Z.X, Z.X[extra]])
    y = np.concatenate([Z.y, Z.y[extra]])
    return make_neighborhood(X, y, "ros", Z.x, Z.bx, schema, distance_kind, Z.warnings)


def gen_ros(x, X: np.ndarray, bb: BlackBox, schema: FeatureSchema, N: int = 1000, seed: int = 0,
            k: int = 100, distance_kind: str = NEUCLID) -> Neighborhood:
    rnd_seed, ros_seed = np.random.SeedSequence(seed).spawn(2)
    Z = gen_rnd(x, X, bb, schema, N, rnd_seed.generate_state(1)[0], k, distance_kind)
    return oversample(Z, np.random.default_rng(ros_seed), schema, distance_kind)


def gen_global(X: np.ndarray, bb: BlackBox, schema: FeatureSchema, x=None,
               distance_kind: str = NEUCLID) -> Neighborhood:
    """The whole test set labeled by the black box (``x`` only feeds the statistics)."""
    X = np.asarray(X, dtype=float)
    y = bb.predict(X)
    ref = X[0] if x is None else np.asarray(x, dtype=float)
    bx = int(y[0]) if x is None else _bx(bb, ref)
    return make_neighborhood(X, y, "global", ref, bx, schema, distance_kind)
