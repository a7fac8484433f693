"""Split conditions, premises (conjunctions of conditions) and decision rules.

Instances are plain ``{feature: value}`` mappings here. ``Premise.covers``
evaluates a premise over a batch of encoded rows instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Union

import numpy as np

from .data import FeatureSchema

INF = math.inf


def format_number(v: float) -> str:
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


@dataclass(frozen=True)
class CategoricalCondition:
    """``feature = value``; the edge of a multiway split may also absorb
    categories never observed at its node, so ``values`` can hold several."""

    feature: str
    values: tuple[str, ...]

    def __post_init__(self):
        if not self.values:
            raise ValueError(f"empty category set for {self.feature!r}")

    @property
    def value(self) -> str:
        return self.values[0]

    def holds(self, v: Any) -> bool:
        return str(v) in self.values

    def mask(self, col: np.ndarray, schema: FeatureSchema) -> np.ndarray:
        spec = schema.feature(self.feature)
        codes = [spec.values.index(v) for v in self.values]
        return np.isin(col, codes)

    def render(self) -> str:
        if len(self.values) == 1:
            return f"{self.feature} = {self.values[0]}"
        return f"{self.feature} in {{{', '.join(self.values)}}}"

    def to_dict(self) -> dict:
        return {"feature": self.feature, "op": "in", "values": list(self.values)}


@dataclass(frozen=True)
class IntervalCondition:
    feature: str
    lower: float = -INF
    upper: float = INF
    lower_closed: bool = False
    upper_closed: bool = False

    def __post_init__(self):
        lo, hi = self.lower, self.upper
        if lo > hi or (lo == hi and not (self.lower_closed and self.upper_closed)):
            raise ValueError(f"empty interval for {self.feature!r}: {self.render()}")

    def holds(self, v: Any) -> bool:
        v = float(v)
        above = v >= self.lower if self.lower_closed else v > self.lower
        below = v <= self.upper if self.upper_closed else v < self.upper
        return above and below

    def mask(self, col: np.ndarray, schema: FeatureSchema | None = None) -> np.ndarray:
        above = col >= self.lower if self.lower_closed else col > self.lower
        below = col <= self.upper if self.upper_closed else col < self.upper
        return above & below

    def intersect(self, other: IntervalCondition) -> IntervalCondition:
        if other.feature != self.feature:
            raise ValueError("cannot intersect conditions on different features")
        if other.lower > self.lower:
            lo, lc = other.lower, other.lower_closed
        elif other.lower < self.lower:
            lo, lc = self.lower, self.lower_closed
        else:
            lo, lc = self.lower, self.lower_closed and other.lower_closed
        if other.upper < self.upper:
            hi, hc = other.upper, other.upper_closed
        elif other.upper > self.upper:
            hi, hc = self.upper, self.upper_closed
        else:
            hi, hc = self.upper, self.upper_closed and other.upper_closed
        return IntervalCondition(self.feature, lo, hi, lc, hc)

    def render(self) -> str:
        a = self.feature
        lo, hi = self.lower, self.upper
        lo_op = "<=" if self.lower_closed else "<"
        hi_op = "<=" if self.upper_closed else "<"
        if lo == -INF and hi == INF:
            return f"{a} any"
        if lo == hi:
            return f"{a} = {format_number(lo)}"
        if lo == -INF:
            return f"{a} {hi_op} {format_number(hi)}"
        if hi == INF:
            return f"{a} {'>=' if self.lower_closed else '>'} {format_number(lo)}"
        return f"{format_number(lo)} {lo_op} {a} {hi_op} {format_number(hi)}"

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "op": "interval",
            "lower": None if self.lower == -INF else self.lower,
            "upper": None if self.upper == INF else self.upper,
            "lower_closed": self.lower_closed,
            "upper_closed": self.upper_closed,
        }


Condition = Union[CategoricalCondition, IntervalCondition]


def condition_from_dict(doc: Mapping[str, Any]) -> Condition:
    if doc["op"] == "in":
        return CategoricalCondition(doc["feature"], tuple(doc["values"]))
    lo = -INF if doc.get("lower") is None else float(doc["lower"])
    hi = INF if doc.get("upper") is None else float(doc["upper"])
    return IntervalCondition(doc["feature"], lo, hi, bool(doc["lower_closed"]), bool(doc["upper_closed"]))


class Premise:
    """Conjunction of split conditions, at most one per feature.

    Equality ignores condition order; iteration and rendering keep it.
    """

    __slots__ = ("conditions", "_by_feature")

    def __init__(self, conditions: Iterable[Condition] = ()):
        conds = tuple(conditions)
        by_feature = {}
        for c in conds:
            if c.feature in by_feature:
                raise ValueError(f"premise has two conditions on {c.feature!r}")
            by_feature[c.feature] = c
        self.conditions = conds
        self._by_feature = by_feature

    def __iter__(self):
        return iter(self.conditions)

    def __len__(self) -> int:
        return len(self.conditions)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Premise) and self._by_feature == other._by_feature

    def __hash__(self) -> int:
        return hash(frozenset(self._by_feature.items()))

    def __repr__(self) -> str:
        return f"Premise({self.render()})"

    def get(self, feature: str) -> Condition | None:
        return self._by_feature.get(feature)

    @property
    def features(self) -> list[str]:
        return [c.feature for c in self.conditions]

    def satisfied_by(self, x: Mapping[str, Any]) -> bool:
        return all(c.holds(x[c.feature]) for c in self.conditions)

    def falsified(self, x: Mapping[str, Any]) -> list[Condition]:
        return [c for c in self.conditions if not c.holds(x[c.feature])]

    def count_falsified(self, x: Mapping[str, Any]) -> int:
        return sum(1 for c in self.conditions if not c.holds(x[c.feature]))

    def update(self, delta: Iterable[Condition]) -> Premise:
        """``p[delta]``: delta's conditions overwrite same-feature ones, the rest are kept."""
        delta = Premise(delta)
        kept = [delta.get(c.feature) or c for c in self.conditions]
        fresh = [c for c in delta if self.get(c.feature) is None]
        return Premise(kept + fresh)

    def covers(self, X: np.ndarray, schema: FeatureSchema) -> np.ndarray:
        """Boolean mask of the encoded rows in ``X`` that satisfy the premise."""
        X = np.atleast_2d(X)
        mask = np.ones(len(X), dtype=bool)
        for c in self.conditions:
            mask &= c.mask(X[:, schema.index(c.feature)], schema)
        return mask

    def render(self) -> str:
        return "{" + ", ".join(c.render() for c in self.conditions) + "}"

    def to_list(self) -> list[dict]:
        return [c.to_dict() for c in self.conditions]


@dataclass(frozen=True)
class Rule:
    premise: Premise
    outcome: str

    def render(self, target: str = "y") -> str:
        return f"{self.premise.render()} -> {target} = {self.outcome}"

    def to_dict(self) -> dict:
        return {"premise": self.premise.to_list(), "outcome": self.outcome}

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> Rule:
        return cls(Premise(condition_from_dict(c) for c in doc["premise"]), str(doc["outcome"]))


def satisfies(x: Mapping[str, Any], p: Premise) -> bool:
    return p.satisfied_by(x)


def update_premise(p: Premise, delta: Iterable[Condition]) -> Premise:
    return p.update(delta)


def count_falsified(p: Premise, x: Mapping[str, Any]) -> int:
    """Number of conditions of ``p`` that ``x`` falsifies (``nf``)."""
    return p.count_falsified(x)


# shorthand constructors, mostly for tests and fixtures
def le(feature: str, v: float) -> IntervalCondition:
    return IntervalCondition(feature, upper=float(v), upper_closed=True)


def gt(feature: str, v: float) -> IntervalCondition:
    return IntervalCondition(feature, lower=float(v), lower_closed=False)


def between(feature: str, lo: float, hi: float) -> IntervalCondition:
    """``lo < feature <= hi``, the shape produced by nested threshold splits."""
    return IntervalCondition(feature, float(lo), float(hi), False, True)


def eq(feature: str, *values: str) -> CategoricalCondition:
    return CategoricalCondition(feature, tuple(values))
