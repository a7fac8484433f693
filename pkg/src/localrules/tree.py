"""Gain-ratio decision trees over encoded instances.

Categorical features split multiway over the categories observed at the node
and are consumed along that path; continuous features split in two at a
threshold and can be split again deeper down. A category never observed at a
node is routed to the child with the largest support, and that child's edge
condition lists it explicitly, so every instance satisfies the premise of the
leaf it reaches.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import FeatureSchema
from .rules import CategoricalCondition, IntervalCondition, Premise, Rule

_EPS = 1e-12


@dataclass(frozen=True)
class TreeParams:
    min_leaf: int = 2
    max_depth: int | None = None
    # number of features drawn per node; None means all (the surrogate default)
    max_features: int | None = None
    mdl_correction: bool = True

    def __post_init__(self):
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")


@dataclass
class Node:
    id: int
    depth: int
    counts: tuple[int, int]
    label: int
    feature: int = -1
    threshold: float = math.nan
    children: list[int] = field(default_factory=list)
    # categorical splits: codes routed to each child, own category first
    branch_codes: list[tuple[int, ...]] = field(default_factory=list)
    parent: int = -1

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0

    @property
    def support(self) -> int:
        return self.counts[0] + self.counts[1]


@dataclass(frozen=True)
class LeafInfo:
    id: int
    premise: Premise
    label: str
    support: int


def entropy(counts: np.ndarray) -> float:
    """Shannon entropy (bits) of a count vector."""
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def _binary_entropy(pos: np.ndarray, n: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(n > 0, pos / np.where(n > 0, n, 1), 0.0)
        h = np.zeros_like(p)
        inner = (p > 0) & (p < 1)
        q = p[inner]
        h[inner] = -(q * np.log2(q) + (1 - q) * np.log2(1 - q))
    return h


def gain_ratio(y: np.ndarray, groups: np.ndarray) -> tuple[float, float]:
    """Information gain and gain ratio of partitioning labels ``y`` by ``groups``."""
    y = np.asarray(y)
    groups = np.asarray(groups)
    n = len(y)
    parent = entropy(np.bincount(y, minlength=2))
    cond, split_info = 0.0, 0.0
    for g in np.unique(groups):
        sel = groups == g
        w = sel.sum() / n
        cond += w * entropy(np.bincount(y[sel], minlength=2))
        split_info -= w * math.log2(w)
    gain = parent - cond
    return gain, (gain / split_info if split_info > 0 else 0.0)


class DecisionTree:
    def __init__(self, schema: FeatureSchema, nodes: list[Node]):
        self.schema = schema
        self.nodes = nodes
        self._compile()

    @property
    def root(self) -> Node:
        return self.nodes[0]

    @property
    def depth(self) -> int:
        return max(n.depth for n in self.nodes)

    @property
    def n_leaves(self) -> int:
        return sum(1 for n in self.nodes if n.is_leaf)

    def _compile(self) -> None:
        width = max([2] + [len(f.values) for f in self.schema.features if f.is_categorical])
        k = len(self.nodes)
        self._feat = np.zeros(k, dtype=int)
        self._thr = np.zeros(k)
        self._is_cat = np.zeros(k, dtype=bool)
        self._next = np.tile(np.arange(k)[:, None], (1, width))
        self._label = np.array([n.label for n in self.nodes], dtype=int)
        for n in self.nodes:
            if n.is_leaf:
                continue
            self._feat[n.id] = n.feature
            if n.branch_codes:
                self._is_cat[n.id] = True
                for child, codes in zip(n.children, n.branch_codes):
                    self._next[n.id, list(codes)] = child
            else:
                self._thr[n.id] = n.threshold
                self._next[n.id, 0] = n.children[0]
                self._next[n.id, 1] = n.children[1]
        self._width = width

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node id reached by each encoded row."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.zeros(len(X), dtype=int)
        rows = np.arange(len(X))
        for _ in range(self.depth):
            v = X[rows, self._feat[node]]
            cat_slot = np.clip(np.nan_to_num(v), 0, self._width - 1).astype(int)
            slot = np.where(self._is_cat[node], cat_slot, (v > self._thr[node]).astype(int))
            node = self._next[node, slot]
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Label indices for a batch of encoded rows."""
        return self._label[self.apply(X)]

    def predict_label(self, x) -> str:
        """Label string for one instance (mapping or encoded row)."""
        row = x if isinstance(x, np.ndarray) else self.schema.encode(x)
        return self.schema.labels[int(self.predict(row[None, :])[0])]

    def path(self, leaf_id: int) -> list[int]:
        ids = []
        node = leaf_id
        while node >= 0:
            ids.append(node)
            node = self.nodes[node].parent
        return ids[::-1]

    def path_premise(self, leaf_id: int) -> Premise:
        """Edge conditions from the root to ``leaf_id``, merged per feature."""
        merged: dict[str, object] = {}
        ids = self.path(leaf_id)
        for parent_id, child_id in zip(ids, ids[1:]):
            parent = self.nodes[parent_id]
            spec = self.schema.features[parent.feature]
            slot = parent.children.index(child_id)
            if parent.branch_codes:
                cond = CategoricalCondition(spec.name, tuple(spec.values[c] for c in parent.branch_codes[slot]))
            elif slot == 0:
                cond = IntervalCondition(spec.name, upper=parent.threshold, upper_closed=True)
            else:
                cond = IntervalCondition(spec.name, lower=parent.threshold, lower_closed=False)
            prev = merged.get(spec.name)
            if isinstance(prev, IntervalCondition):
                cond = prev.intersect(cond)
            merged[spec.name] = cond
        return Premise(merged.values())

    def leaves(self, label_filter: str | None = None) -> list[LeafInfo]:
        """Leaves in left-to-right order, optionally only those predicting ``label_filter``."""
        out = []
        for n in self.nodes:
            if not n.is_leaf:
                continue
            label = self.schema.labels[n.label]
            if label_filter is not None and label != label_filter:
                continue
            out.append(LeafInfo(n.id, self.path_premise(n.id), label, n.support))
        return out

    def leaf_rule(self, x) -> tuple[int, Rule]:
        row = x if isinstance(x, np.ndarray) else self.schema.encode(x)
        leaf = int(self.apply(row[None, :])[0])
        return leaf, Rule(self.path_premise(leaf), self.schema.labels[self.nodes[leaf].label])

    def dump(self) -> str:
        lines: list[str] = []
        self._dump(0, 0, "", lines)
        return "\n".join(lines)

    def _dump(self, node_id: int, indent: int, edge: str, lines: list[str]) -> None:
        n = self.nodes[node_id]
        pad = "  " * indent
        head = f"{pad}{edge} " if edge else pad
        if n.is_leaf:
            lines.append(f"{head}-> {self.schema.labels[n.label]} {list(n.counts)}")
            return
        spec = self.schema.features[n.feature]
        if edge:
            lines.append(head.rstrip())
        for i, child in enumerate(n.children):
            if n.branch_codes:
                text = CategoricalCondition(spec.name, tuple(spec.values[c] for c in n.branch_codes[i])).render()
            elif i == 0:
                text = IntervalCondition(spec.name, upper=n.threshold, upper_closed=True).render()
            else:
                text = IntervalCondition(spec.name, lower=n.threshold).render()
            self._dump(child, indent + 1, text, lines)


class _Builder:
    def __init__(self, X, y, schema: FeatureSchema, params: TreeParams, rng):
        self.X = X
        self.y = y
        self.schema = schema
        self.params = params
        self.rng = rng
        self.is_cat = schema.categorical_mask
        self.nodes: list[Node] = []

    def grow(self, idx: np.ndarray, depth: int, parent: int, used: frozenset) -> int:
        y = self.y[idx]
        counts = np.bincount(y, minlength=2)
        label = 1 if counts[1] > counts[0] else 0
        node = Node(len(self.nodes), depth, (int(counts[0]), int(counts[1])), label, parent=parent)
        self.nodes.append(node)
        p = self.params
        if (
            counts.min() == 0
            or len(idx) < 2 * p.min_leaf
            or (p.max_depth is not None and depth >= p.max_depth)
        ):
            return node.id

        split = self.best_split(idx, y, used)
        if split is None:
            return node.id
        j, threshold, groups, codes = split
        node.feature = j
        if codes is None:
            node.threshold = threshold
            for part in (idx[groups == 0], idx[groups == 1]):
                node.children.append(self.grow(part, depth + 1, node.id, used))
        else:
            child_used = used | {j}
            for own in codes:
                node.children.append(self.grow(idx[groups == own[0]], depth + 1, node.id, child_used))
            node.branch_codes = codes
        return node.id

    def candidate_features(self, used: frozenset) -> tuple[list[int], list[int]]:
        free = [j for j in range(self.schema.m) if j not in used]
        k = self.params.max_features
        if k is None or k >= len(free):
            return free, []
        picked = sorted(self.rng.choice(len(free), size=k, replace=False).tolist())
        chosen = [free[i] for i in picked]
        return chosen, [j for j in free if j not in chosen]

    def best_split(self, idx, y, used):
        first, rest = self.candidate_features(used)
        found = self._select(idx, y, first)
        if found is None and rest:
            found = self._select(idx, y, rest)
        return found

    def _select(self, idx, y, features):
        parent_h = entropy(np.bincount(y, minlength=2))
        cands = []
        for j in features:
            col = self.X[idx, j]
            res = self._categorical(col, y, parent_h, j) if self.is_cat[j] else self._continuous(col, y, parent_h)
            if res is not None and res[0] > _EPS:
                cands.append((j, *res))
        if not cands:
            return None
        # C4.5: among splits with at least average gain, maximise the gain ratio
        avg = sum(c[1] for c in cands) / len(cands)
        best = None
        for c in cands:
            if c[1] + _EPS < avg:
                continue
            if best is None or c[2] > best[2] + _EPS:
                best = c
        j, _gain, _ratio, threshold, groups, codes = best
        return j, threshold, groups, codes

    def _categorical(self, col, y, parent_h, j):
        codes = col.astype(int)
        spec = self.schema.features[j]
        k = len(spec.values)
        n_c = np.bincount(codes, minlength=k)
        present = np.flatnonzero(n_c)
        if len(present) < 2 or (n_c >= self.params.min_leaf).sum() < 2:
            return None
        pos_c = np.bincount(codes, weights=y, minlength=k)
        n = len(y)
        w = n_c[present] / n
        cond = float((w * _binary_entropy(pos_c[present], n_c[present].astype(float))).sum())
        split_info = float(-(w * np.log2(w)).sum())
        gain = parent_h - cond
        # largest child (first on ties) absorbs categories not seen here
        absorber = present[np.argmax(n_c[present])]
        absent = tuple(int(c) for c in np.flatnonzero(n_c == 0))
        branch = [(int(c),) + (absent if c == absorber else ()) for c in present]
        return gain, gain / split_info, math.nan, codes, branch

    def _continuous(self, col, y, parent_h):
        n = len(col)
        order = np.argsort(col, kind="stable")
        vs = col[order]
        ys = y[order]
        uniq, start, cnt = np.unique(vs, return_index=True, return_counts=True)
        if len(uniq) < 2:
            return None
        pos_g = np.add.reduceat(ys, start)
        # boundary between groups g and g+1 unless both are pure in the same class
        pure0 = pos_g == 0
        pure1 = pos_g == cnt
        same = (pure0[:-1] & pure0[1:]) | (pure1[:-1] & pure1[1:])
        left_n = np.cumsum(cnt)[:-1]
        right_n = n - left_n
        ok = ~same & (left_n >= self.params.min_leaf) & (right_n >= self.params.min_leaf)
        if not ok.any():
            return None
        left_pos = np.cumsum(pos_g)[:-1]
        right_pos = pos_g.sum() - left_pos
        ln = left_n.astype(float)
        rn = right_n.astype(float)
        cond = (ln * _binary_entropy(left_pos, ln) + rn * _binary_entropy(right_pos, rn)) / n
        gains = np.where(ok, parent_h - cond, -np.inf)
        g = int(np.argmax(gains))
        # C4.5 charges continuous splits for the choice among cut points
        gain = float(gains[g]) - (math.log2(len(uniq) - 1) / n if self.params.mdl_correction else 0.0)
        wl = ln[g] / n
        split_info = -(wl * math.log2(wl) + (1 - wl) * math.log2(1 - wl))
        threshold = (uniq[g] + uniq[g + 1]) / 2.0
        groups = (col > threshold).astype(int)
        return gain, gain / split_info, float(threshold), groups, None


def build_tree(
    X: np.ndarray,
    y: np.ndarray,
    schema: FeatureSchema,
    params: TreeParams | None = None,
    rng: np.random.Generator | None = None,
) -> DecisionTree:
    """Greedy top-down induction on encoded rows ``X`` with label indices ``y``."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if len(y) == 0:
        raise ValueError("cannot build a tree from an empty neighborhood")
    if X.shape != (len(y), schema.m):
        raise ValueError(f"X has shape {X.shape}, expected ({len(y)}, {schema.m})")
    params = params or TreeParams()
    if params.max_features is not None and rng is None:
        rng = np.random.default_rng(0)
    builder = _Builder(X, y, schema, params, rng)
    builder.grow(np.arange(len(y)), 0, -1, frozenset())
    return DecisionTree(schema, builder.nodes)


def predict(c: DecisionTree, x) -> str:
    return c.predict_label(x)


def path_premise(c: DecisionTree, leaf_id: int) -> Premise:
    return c.path_premise(leaf_id)


def enumerate_leaves(c: DecisionTree, label_filter: str | None = None) -> list[tuple[Premise, str]]:
    return [(leaf.premise, leaf.label) for leaf in c.leaves(label_filter)]
