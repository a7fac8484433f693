"""Agreement measures between the surrogate tree and the black box.

f1 treats the second schema label as the positive class. Scores that are
undefined for an instance (empty coverage, no counterfactuals) come back as
``None`` and are skipped when aggregating.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .rules import Rule
from .tree import DecisionTree

if TYPE_CHECKING:
    from .blackbox import BlackBox
    from .explanation import Explanation


def f1(predicted: Sequence[int], reference: Sequence[int], positive: int = 1) -> float:
    predicted = np.asarray(predicted)
    reference = np.asarray(reference)
    if predicted.shape != reference.shape:
        raise ValueError(f"length mismatch: {predicted.shape} vs {reference.shape}")
    if predicted.size == 0:
        raise ValueError("f1 of empty label lists is undefined")
    pp = predicted == positive
    rp = reference == positive
    tp = int((pp & rp).sum())
    fp = int((pp & ~rp).sum())
    fn = int((~pp & rp).sum())
    if tp + fp + fn == 0:
        # no positives anywhere and every label agrees
        return 1.0
    return 2 * tp / (2 * tp + fp + fn)


def _labels(bb: BlackBox | None, Z) -> tuple[np.ndarray, np.ndarray]:
    """Rows and black-box labels of ``Z``, querying ``bb`` only when nothing is cached."""
    if hasattr(Z, "X") and hasattr(Z, "y"):
        return Z.X, np.asarray(Z.y)
    X = np.atleast_2d(np.asarray(Z, dtype=float))
    return X, bb.predict(X)


def hit(c: DecisionTree, bb: BlackBox, x: np.ndarray, bx: int | None = None) -> int:
    x = np.asarray(x, dtype=float)
    if bx is None:
        bx = int(bb.predict(x[None, :])[0])
    return int(int(c.predict(x[None, :])[0]) == bx)


def fidelity(c: DecisionTree, bb: BlackBox | None, Z) -> float:
    X, yb = _labels(bb, Z)
    return f1(c.predict(X), yb)


def _restricted_f1(c, bb, Z, mask) -> float | None:
    X, yb = _labels(bb, Z)
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        return None
    return f1(c.predict(X[mask]), yb[mask])


def l_fidelity(c: DecisionTree, bb: BlackBox | None, Z, r: Rule) -> float | None:
    X, _ = _labels(bb, Z)
    return _restricted_f1(c, bb, Z, r.premise.covers(X, c.schema))


def cl_fidelity(c: DecisionTree, bb: BlackBox | None, Z, phi: Iterable[Rule]) -> float | None:
    X, _ = _labels(bb, Z)
    mask = np.zeros(len(X), dtype=bool)
    for q in phi:
        mask |= q.premise.covers(X, c.schema)
    return _restricted_f1(c, bb, Z, mask)


def c_hit(bb: BlackBox, explanation: Explanation) -> float | None:
    """Share of counterfactual instances on which b agrees with the rule's outcome."""
    pairs = [(q, xi) for q, xi in zip(explanation.counterfactual_rules, explanation.counterfactual_instances)
             if xi is not None]
    if not pairs:
        return None
    schema = bb.schema
    X = schema.encode_many([xi for _, xi in pairs])
    got = bb.predict(X)
    want = np.array([schema.label_index(q.outcome) for q, _ in pairs])
    return float(np.mean(got == want))


@dataclass
class EvalRecord:
    index: int
    hit: int
    fidelity: float
    l_fidelity: float | None
    c_hit: float | None
    cl_fidelity: float | None
    tree_depth: int
    rule_length: int
    nf: int | None

    def as_dict(self) -> dict:
        return asdict(self)


METRIC_FIELDS = ("hit", "fidelity", "l_fidelity", "c_hit", "cl_fidelity", "tree_depth", "rule_length", "nf")


def aggregate(records: Sequence[EvalRecord]) -> dict[str, dict]:
    """Mean, population std, and skip count per metric, ignoring undefined values."""
    out = {}
    for name in METRIC_FIELDS:
        vals = [getattr(r, name) for r in records]
        defined = np.array([v for v in vals if v is not None], dtype=float)
        out[name] = {
            "mean": float(defined.mean()) if defined.size else None,
            "std": float(defined.std()) if defined.size else None,
            "n": int(defined.size),
            "skipped": len(vals) - int(defined.size),
        }
    return out

