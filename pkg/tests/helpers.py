"""Fixtures shared across test modules: hand-built trees, random trees, a brute-force oracle."""

from __future__ import annotations

import math

import numpy as np

from localrules.data import FeatureSchema, FeatureSpec
from localrules.rules import CategoricalCondition, IntervalCondition
from localrules.tree import DecisionTree, Node


def loan_schema() -> FeatureSchema:
    return FeatureSchema(
        (
            FeatureSpec("age", "continuous", min=0, max=100),
            FeatureSpec("job", "categorical", values=("clerk", "other")),
            FeatureSpec("income", "continuous", min=0, max=5000),
        ),
        "decision",
        ("deny", "grant"),
    )


DENY, GRANT = 0, 1
AGE, JOB, INCOME = 0, 1, 2


def _leaf(i, depth, parent, label):
    return Node(i, depth, (1, 0) if label == DENY else (0, 1), label, parent=parent)


def _split(i, depth, parent, feature, children, threshold=math.nan, codes=()):
    return Node(i, depth, (1, 1), DENY, feature=feature, threshold=threshold, children=list(children),
                branch_codes=list(codes), parent=parent)


def loan_tree() -> DecisionTree:
    """The textbook loan tree: age, then job or income, with leaves in preorder ids."""
    nodes = [
        _split(0, 0, -1, AGE, [1, 8], threshold=25),
        _split(1, 1, 0, JOB, [2, 5], codes=[(0,), (1,)]),
        _split(2, 2, 1, INCOME, [3, 4], threshold=900),
        _leaf(3, 3, 2, DENY),
        _leaf(4, 3, 2, GRANT),
        _split(5, 2, 1, AGE, [6, 7], threshold=17),
        _leaf(6, 3, 5, DENY),
        _leaf(7, 3, 5, GRANT),
        _split(8, 1, 0, INCOME, [9, 12], threshold=1500),
        _split(9, 2, 8, JOB, [10, 11], codes=[(0,), (1,)]),
        _leaf(10, 3, 9, DENY),
        _leaf(11, 3, 9, GRANT),
        _leaf(12, 2, 8, GRANT),
    ]
    return DecisionTree(loan_schema(), nodes)


# ----------------------------------------------------------------- random trees

def mixed_schema() -> FeatureSchema:
    return FeatureSchema(
        (
            FeatureSpec("a", "continuous", min=0, max=20),
            FeatureSpec("b", "categorical", values=("b0", "b1", "b2")),
            FeatureSpec("c", "continuous", min=0, max=20),
            FeatureSpec("d", "categorical", values=("d0", "d1", "d2", "d3")),
            FeatureSpec("e", "continuous", min=-5, max=5),
        ),
        "y",
        ("neg", "pos"),
    )


def random_tree(schema: FeatureSchema, rng: np.random.Generator, max_depth: int = 6,
                p_leaf: float = 0.25) -> DecisionTree:
    """Random tree whose every path is satisfiable; categorical features split once per path."""
    nodes: list[Node] = []

    def grow(depth, parent, bounds, used):
        i = len(nodes)
        if depth >= max_depth or (depth > 0 and rng.random() < p_leaf):
            label = int(rng.integers(0, 2))
            nodes.append(_leaf(i, depth, parent, label))
            return i
        options = [j for j in range(schema.m) if not (schema.features[j].is_categorical and j in used)]
        options = [j for j in options if schema.features[j].is_categorical or bounds[j][1] - bounds[j][0] >= 2]
        if not options:
            nodes.append(_leaf(i, depth, parent, int(rng.integers(0, 2))))
            return i
        j = int(rng.choice(options))
        spec = schema.features[j]
        if spec.is_categorical:
            k = len(spec.values)
            perm = [int(v) for v in rng.permutation(k)]
            cut = sorted(rng.choice(np.arange(1, k), size=int(rng.integers(1, k)), replace=False).tolist())
            groups = [tuple(g) for g in np.split(np.array(perm), cut)]
            node = _split(i, depth, parent, j, [], codes=groups)
            nodes.append(node)
            for _ in groups:
                node.children.append(grow(depth + 1, i, bounds, used | {j}))
        else:
            lo, hi = bounds[j]
            t = float(rng.integers(int(lo) + 1, int(hi)))
            node = _split(i, depth, parent, j, [], threshold=t)
            nodes.append(node)
            node.children.append(grow(depth + 1, i, {**bounds, j: (lo, t)}, used))
            node.children.append(grow(depth + 1, i, {**bounds, j: (t, hi)}, used))
        return i

    start = {j: (f.min, f.max) for j, f in enumerate(schema.features)}
    grow(0, -1, start, frozenset())
    return DecisionTree(schema, nodes)


def random_instance(schema: FeatureSchema, rng: np.random.Generator) -> dict:
    out = {}
    for f in schema.features:
        if f.is_categorical:
            out[f.name] = f.values[int(rng.integers(0, len(f.values)))]
        else:
            out[f.name] = int(rng.integers(int(f.min), int(f.max) + 1))
    return out


def brute_force_paths(tree: DecisionTree) -> list[tuple[dict, str]]:
    """Every root-to-leaf path as {feature: constraint}, walked recursively in child order.

    A constraint is ``("num", lo, hi)`` meaning lo < v <= hi, or ``("cat", frozenset)``.
    """
    schema = tree.schema
    out = []

    def walk(i, cons):
        n = tree.nodes[i]
        if n.is_leaf:
            out.append((cons, schema.labels[n.label]))
            return
        spec = schema.features[n.feature]
        for slot, child in enumerate(n.children):
            c = dict(cons)
            if n.branch_codes:
                vals = frozenset(spec.values[k] for k in n.branch_codes[slot])
                prev = c.get(spec.name, ("cat", frozenset(spec.values)))[1]
                c[spec.name] = ("cat", prev & vals)
            else:
                _, lo, hi = c.get(spec.name, ("num", -math.inf, math.inf))
                c[spec.name] = ("num", lo, min(hi, n.threshold)) if slot == 0 else ("num", max(lo, n.threshold), hi)
            walk(child, c)

    walk(0, {})
    return out


def constraint_violations(cons: dict, x: dict) -> int:
    bad = 0
    for name, c in cons.items():
        if c[0] == "cat":
            bad += x[name] not in c[1]
        else:
            bad += not (c[1] < x[name] <= c[2])
    return bad


def oracle_counterfactuals(tree: DecisionTree, x: dict, outcome: str) -> list[tuple[dict, str, int]]:
    cands = [(c, lab, constraint_violations(c, x)) for c, lab in brute_force_paths(tree) if lab != outcome]
    if not cands:
        return []
    best = min(k for _, _, k in cands)
    return [t for t in cands if t[2] == best]


def premise_as_constraints(premise) -> dict:
    out = {}
    for cond in premise:
        if isinstance(cond, CategoricalCondition):
            out[cond.feature] = ("cat", frozenset(cond.values))
        else:
            assert isinstance(cond, IntervalCondition)
            assert not cond.lower_closed and cond.upper_closed or cond.upper == math.inf
            out[cond.feature] = ("num", cond.lower, cond.upper)
    return out


def normalize_constraints(cons: dict, schema: FeatureSchema) -> dict:
    """Drop constraints that allow every value (a full category set)."""
    out = {}
    for name, c in cons.items():
        if c[0] == "cat" and c[1] == frozenset(schema.feature(name).values):
            continue
        out[name] = c
    return out
