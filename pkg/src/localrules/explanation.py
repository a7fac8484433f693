"""Decision rule, counterfactual rules and counterfactual instances from a surrogate tree."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .blackbox import BlackBox
from .data import FeatureSchema, Instance
from .distance import NEUCLID
from .genetic import GAParams, Neighborhood, build_neighborhood
from .metrics import fidelity
from .rules import CategoricalCondition, IntervalCondition, Rule
from .tree import DecisionTree, TreeParams, build_tree

# open interval bounds are stepped over by this fraction of the feature range
EPS_FRACTION = 1e-4


@dataclass
class Explanation:
    instance: Instance
    blackbox_label: str
    rule: Rule
    counterfactual_rules: list[Rule]
    counterfactual_instances: list[Instance]
    nf: list[int]
    diagnostics: dict[str, Any] = field(default_factory=dict)
    tree: DecisionTree | None = field(default=None, repr=False)
    neighborhood: Neighborhood | None = field(default=None, repr=False)

    def to_dict(self, target: str = "y") -> dict:
        return {
            "instance": self.instance,
            "blackbox_label": self.blackbox_label,
            "rule": {"text": self.rule.render(target), **self.rule.to_dict()},
            "counterfactuals": [
                {"text": q.render(target), **q.to_dict(), "nf": k, "instance": xi}
                for q, k, xi in zip(self.counterfactual_rules, self.nf, self.counterfactual_instances)
            ],
            "diagnostics": self.diagnostics,
        }

    def to_json(self, target: str = "y") -> str:
        return json.dumps(self.to_dict(target), sort_keys=True, allow_nan=False)

    def render(self, target: str = "y") -> str:
        lines = [f"r = {self.rule.render(target)}"]
        if not self.counterfactual_rules:
            lines.append("phi = {}")
        else:
            body = [q.render(target) for q in self.counterfactual_rules]
            lines.append("phi = { " + body[0] + ("," if len(body) > 1 else " }"))
            for i, text in enumerate(body[1:], start=1):
                lines.append("        " + text + ("," if i < len(body) - 1 else " }"))
        for q, xi in zip(self.counterfactual_rules, self.counterfactual_instances):
            changed = {k: v for k, v in xi.items() if self.instance.get(k) != v}
            lines.append(f"  counterfactual instance changes {changed}")
        return "\n".join(lines)


def _row(c: DecisionTree, x) -> np.ndarray:
    return np.asarray(x, dtype=float) if isinstance(x, np.ndarray) else c.schema.encode(x)


def extract_rule(c: DecisionTree, x) -> Rule:
    """Premise of the leaf ``x`` reaches, concluding that leaf's label."""
    _, rule = c.leaf_rule(_row(c, x))
    return rule


def extract_counterfactuals(c: DecisionTree, r: Rule, x) -> list[Rule]:
    """Opposite-label leaf premises that ``x`` falsifies the fewest conditions of."""
    xd = x if isinstance(x, Mapping) else c.schema.decode(_row(c, x))
    phi: list[Rule] = []
    best = math.inf
    for leaf in c.leaves():
        if leaf.label == r.outcome:
            continue
        k = leaf.premise.count_falsified(xd)
        if k < best:
            phi, best = [Rule(leaf.premise, leaf.label)], k
        elif k == best:
            phi.append(Rule(leaf.premise, leaf.label))
    return phi


def _step(spec, bound: float, upward: bool) -> float:
    eps = EPS_FRACTION * spec.range if spec.range > 0 else EPS_FRACTION
    v = bound + eps if upward else bound - eps
    if v == bound:
        v = math.nextafter(bound, math.inf if upward else -math.inf)
    return v


def counterfactual_instance(q: Rule, x: Mapping[str, Any], schema: FeatureSchema) -> Instance:
    """Copy of ``x`` moved just enough to satisfy every condition of ``q``."""
    out = dict(x)
    for cond in q.premise.falsified(x):
        spec = schema.feature(cond.feature)
        if isinstance(cond, CategoricalCondition):
            out[cond.feature] = cond.value
            continue
        assert isinstance(cond, IntervalCondition)
        v = float(x[cond.feature])
        if v < cond.lower or (v == cond.lower and not cond.lower_closed):
            new = cond.lower if cond.lower_closed else _step(spec, cond.lower, upward=True)
        else:
            new = cond.upper if cond.upper_closed else _step(spec, cond.upper, upward=False)
        if not cond.holds(new):
            new = (cond.lower + cond.upper) / 2.0
        out[cond.feature] = int(new) if float(new).is_integer() else float(new)
    if not q.premise.satisfied_by(out):
        raise RuntimeError(f"could not build an instance satisfying {q.premise.render()}")
    return out


@dataclass(frozen=True)
class ExplainParams:
    ga: GAParams = GAParams()
    tree: TreeParams = TreeParams()
    distance: str = NEUCLID


def explain_with(
    x: np.ndarray,
    Z: Neighborhood,
    c: DecisionTree,
    schema: FeatureSchema,
    bx: int,
    queries: int | None = None,
) -> Explanation:
    """Explanation of ``x`` from an already built neighborhood and tree."""
    xd = schema.decode(x)
    rule = extract_rule(c, x)
    phi = extract_counterfactuals(c, rule, xd)
    nf = [q.premise.count_falsified(xd) for q in phi]
    cf_instances = [counterfactual_instance(q, xd, schema) for q in phi]
    diagnostics = {
        "fidelity": round(fidelity(c, None, Z), 12),
        "rule_length": len(rule.premise),
        "nf": nf[0] if nf else None,
        "tree_depth": c.depth,
        "tree_leaves": c.n_leaves,
        "neighborhood": Z.stats(schema),
    }
    if queries is not None:
        diagnostics["blackbox_queries"] = queries
    return Explanation(xd, schema.labels[bx], rule, phi, cf_instances, nf, diagnostics, c, Z)


def explain(x, bb: BlackBox, schema: FeatureSchema, params: ExplainParams = ExplainParams()) -> Explanation:
    """Genetic neighborhood, surrogate tree, then rule and counterfactuals for ``x``.

    ``schema`` must carry empirical distributions for the mutation operator.
    """
    row = schema.encode(x) if isinstance(x, Mapping) else np.asarray(x, dtype=float)
    before = bb.queries
    Z = build_neighborhood(row, bb, params.ga, schema, params.distance)
    c = build_tree(Z.X, Z.y, schema, params.tree)
    return explain_with(row, Z, c, schema, Z.bx, bb.queries - before)
