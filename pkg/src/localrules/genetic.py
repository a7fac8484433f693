"""Genetic neighborhood generation around the instance being explained.

The population starts as N copies of x. Each generation applies tournament
selection, two-point crossover and per-feature mutation from the empirical
distributions, then labels the whole population with one black-box call.
Two runs, one rewarding agreement with b(x) and one rewarding disagreement,
are merged into the neighborhood the surrogate is trained on.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .blackbox import BlackBox
from .data import FeatureSchema
from .distance import NEUCLID, distance

TOURNAMENT_SIZE = 3


class FitnessKind(enum.Enum):
    SAME = "same"
    DIFFERENT = "different"


@dataclass(frozen=True)
class GAParams:
    N: int = 1000
    G: int = 10
    pc: float = 0.5
    pm: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("population size N must be >= 2")
        if self.G < 1:
            raise ValueError("number of generations G must be >= 1")
        if not (0.0 <= self.pc <= 1.0 and 0.0 <= self.pm <= 1.0):
            raise ValueError("pc and pm must be probabilities")


@dataclass(frozen=True)
class Neighborhood:
    """Synthetic (or selected) instances with their cached black-box labels."""

    X: np.ndarray
    y: np.ndarray
    provenance: str
    x: np.ndarray
    bx: int
    mean_distance: float
    warnings: tuple[str, ...] = ()
    history: tuple[float, ...] = field(default=(), compare=False)

    def __len__(self) -> int:
        return len(self.y)

    @property
    def class_counts(self) -> tuple[int, int]:
        c = np.bincount(self.y, minlength=2)
        return int(c[0]), int(c[1])

    @property
    def same_fraction(self) -> float:
        return float(np.mean(self.y == self.bx)) if len(self.y) else 0.0

    def stats(self, schema: FeatureSchema) -> dict:
        c = self.class_counts
        return {
            "generator": self.provenance,
            "size": len(self),
            "class_counts": {schema.labels[0]: c[0], schema.labels[1]: c[1]},
            "same_label_fraction": round(self.same_fraction, 6),
            "mean_distance_to_x": round(self.mean_distance, 6),
            "warnings": list(self.warnings),
        }


def make_neighborhood(X, y, provenance, x, bx, schema, distance_kind=NEUCLID, warnings=(), history=()):
    X = np.asarray(X, dtype=float)
    md = float(np.mean(distance(distance_kind, schema, x, X))) if len(X) else 0.0
    return Neighborhood(X, np.asarray(y, dtype=int), provenance, np.asarray(x, dtype=float), int(bx), md,
                        tuple(warnings), tuple(history))


def fitness(kind: FitnessKind, x, z, bx, bz, d: float) -> float:
    """Reward closeness to ``x`` plus (dis)agreement with b(x); copies of x lose 1."""
    outcome = (bx == bz) if kind is FitnessKind.SAME else (bx != bz)
    identical = bool(np.array_equal(np.asarray(x), np.asarray(z))) if not isinstance(x, dict) else x == z
    return float(outcome) + (1.0 - d) - float(identical)


def fitness_batch(kind: FitnessKind, x: np.ndarray, Z: np.ndarray, bx: int, bz: np.ndarray, d: np.ndarray) -> np.ndarray:
    outcome = (bz == bx) if kind is FitnessKind.SAME else (bz != bx)
    identical = np.all(Z == x, axis=1)
    return outcome.astype(float) + (1.0 - d) - identical.astype(float)


def _two_distinct_cuts(m: int, size: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    a = rng.integers(0, m + 1, size=size)
    b = rng.integers(0, m, size=size)
    b = b + (b >= a)
    return np.minimum(a, b), np.maximum(a, b)


def crossover_two_point(a: np.ndarray, b: np.ndarray, rng: np.random.Generator | None = None,
                        cuts: tuple[int, int] | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Swap the feature segment ``[i, j)`` between two parents; parents are not modified."""
    a = np.asarray(a)
    b = np.asarray(b)
    m = len(a)
    if m < 2 and cuts is None:
        return a.copy(), b.copy()
    if cuts is None:
        lo, hi = _two_distinct_cuts(m, 1, rng or np.random.default_rng())
        i, j = int(lo[0]), int(hi[0])
    else:
        i, j = cuts
        if not 0 <= i < j <= m:
            raise ValueError(f"invalid cut points {cuts} for {m} features")
    c1, c2 = a.copy(), b.copy()
    c1[i:j], c2[i:j] = b[i:j], a[i:j]
    return c1, c2


def crossover_population(P: np.ndarray, pc: float, rng: np.random.Generator) -> np.ndarray:
    """Shuffle into consecutive pairs; each pair crosses with probability ``pc``."""
    n, m = P.shape
    out = P.copy()
    if n < 2 or m < 2:
        return out
    order = rng.permutation(n)
    pairs = order[: (n // 2) * 2].reshape(-1, 2)
    crossing = pairs[rng.random(len(pairs)) < pc]
    if len(crossing) == 0:
        return out
    lo, hi = _two_distinct_cuts(m, len(crossing), rng)
    cols = np.arange(m)
    seg = (cols >= lo[:, None]) & (cols < hi[:, None])
    first, second = P[crossing[:, 0]], P[crossing[:, 1]]
    out[crossing[:, 0]] = np.where(seg, second, first)
    out[crossing[:, 1]] = np.where(seg, first, second)
    return out


def mutate(z: np.ndarray, schema: FeatureSchema, pm: float, rng: np.random.Generator) -> np.ndarray:
    """Resample each feature of ``z`` (one row or a population) with probability ``pm``."""
    Z = np.array(z, dtype=float, copy=True)
    single = Z.ndim == 1
    Z = np.atleast_2d(Z)
    hits = rng.random(Z.shape) < pm
    for j, spec in enumerate(schema.features):
        rows = np.flatnonzero(hits[:, j])
        if len(rows):
            Z[rows, j] = spec.sample(rng, len(rows))
    return Z[0] if single else Z


def tournament_select(P: np.ndarray, fit: np.ndarray, rng: np.random.Generator,
                      size: int = TOURNAMENT_SIZE) -> np.ndarray:
    n = len(P)
    contestants = rng.integers(0, n, size=(n, size))
    winners = contestants[np.arange(n), np.argmax(fit[contestants], axis=1)]
    return P[winners]


def genetic_neigh(
    x: np.ndarray,
    kind: FitnessKind,
    bb: BlackBox,
    params: GAParams,
    schema: FeatureSchema,
    distance_kind: str = NEUCLID,
    rng: np.random.Generator | None = None,
    population: int | None = None,
) -> Neighborhood:
    """One evolutionary run; ``population`` overrides ``params.N`` (used for the N/2 halves)."""
    if not schema.has_empirical:
        raise ValueError("schema lacks empirical distributions; call build_empirical_distributions first")
    rng = rng or np.random.default_rng(params.seed)
    n = params.N if population is None else population
    x = np.asarray(x, dtype=float)
    P = np.tile(x, (n, 1))
    labels = bb.predict(P)
    bx = int(labels[0])
    fit = fitness_batch(kind, x, P, bx, labels, distance(distance_kind, schema, x, P))
    history = [float(fit.mean())]
    for _ in range(params.G):
        P = tournament_select(P, fit, rng)
        P = crossover_population(P, params.pc, rng)
        P = mutate(P, schema, params.pm, rng)
        labels = bb.predict(P)
        fit = fitness_batch(kind, x, P, bx, labels, distance(distance_kind, schema, x, P))
        history.append(float(fit.mean()))
    return make_neighborhood(P, labels, f"genetic-{kind.value}", x, bx, schema, distance_kind, history=history)


def build_neighborhood(
    x: np.ndarray,
    bb: BlackBox,
    params: GAParams,
    schema: FeatureSchema,
    distance_kind: str = NEUCLID,
) -> Neighborhood:
    """Concatenate a same-label run and a different-label run of N/2 each."""
    half = params.N // 2
    same_seed, diff_seed = np.random.SeedSequence(params.seed).spawn(2)
    z_same = genetic_neigh(x, FitnessKind.SAME, bb, params, schema, distance_kind,
                           np.random.default_rng(same_seed), population=half)
    z_diff = genetic_neigh(x, FitnessKind.DIFFERENT, bb, params, schema, distance_kind,
                           np.random.default_rng(diff_seed), population=params.N - half)
    X = np.vstack([z_same.X, z_diff.X])
    y = np.concatenate([z_same.y, z_diff.y])
    return make_neighborhood(X, y, "lore", x, z_same.bx, schema, distance_kind)
