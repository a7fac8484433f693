"""Acceptance criteria, each checked at its stated tolerance and time budget.

Every test appends one PASS/FAIL line that is printed in the pytest terminal
summary (and by ``python tests/test_acceptance.py``).
"""

from __future__ import annotations

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from helpers import (loan_schema, loan_tree, mixed_schema, normalize_constraints, oracle_counterfactuals,
                     premise_as_constraints, random_instance, random_tree)
from localrules.baselines import gen_rnd
from localrules.blackbox import ConstantBlackBox, FunctionBlackBox
from localrules.datasets import GERMAN_CSV, GERMAN_SCHEMA
from localrules.distance import COSINE, MINMAX, NEUCLID, distance
from localrules.explanation import ExplainParams, counterfactual_instance, extract_counterfactuals, extract_rule
from localrules.genetic import FitnessKind, GAParams, build_neighborhood, fitness, genetic_neigh, make_neighborhood
from localrules.harness import instance_seed, run_method
from localrules.metrics import EvalRecord, aggregate, c_hit, cl_fidelity, f1, fidelity, hit, l_fidelity
from localrules.rules import Premise, Rule, between, eq, gt, le

GERMAN_INSTANCES = range(50)


def record(number: int, title: str, passed: bool, detail: str, elapsed: float, budget: float) -> None:
    status = "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES.append(f"[{status}] criterion {number}: {title}: {detail} ({elapsed:.1f} s of {budget:.0f} s)")
    print(ACCEPTANCE_LINES[-1])


def means(results) -> dict:
    agg = aggregate([r for r, _ in results])
    return {k: v["mean"] for k, v in agg.items()}


@pytest.fixture(scope="module")
def lore_german(german):
    t0 = time.perf_counter()
    results = run_method(german, "lore", GERMAN_INSTANCES, ExplainParams(ga=GAParams(N=1000, G=10)))
    return results, time.perf_counter() - t0


# --------------------------------------------------------------------------- 1

def test_loan_tree_rule_and_counterfactuals():
    t0 = time.perf_counter()
    tree = loan_tree()
    x = {"age": 22, "job": "clerk", "income": 800}
    rule = extract_rule(tree, x)
    phi = extract_counterfactuals(tree, rule, x)

    expected_rule = Rule(Premise([le("age", 25), eq("job", "clerk"), le("income", 900)]), "deny")
    q1 = Premise([le("age", 25), eq("job", "clerk"), gt("income", 900)])
    q2 = Premise([between("age", 17, 25), eq("job", "other")])
    q3 = Premise([gt("age", 25), le("income", 1500), eq("job", "other")])
    q4 = Premise([gt("age", 25), gt("income", 1500)])
    leaves = {leaf.premise: leaf for leaf in tree.leaves("grant")}
    nf_all = {name: q.count_falsified(x) for name, q in (("q1", q1), ("q2", q2), ("q3", q3), ("q4", q4))}

    ok = (
        rule == expected_rule
        and [q.premise for q in phi] == [q1, q2]
        and all(q.outcome == "grant" for q in phi)
        and [q.premise.count_falsified(x) for q in phi] == [1, 1]
        and set(leaves) == {q1, q2, q3, q4}
        and nf_all == {"q1": 1, "q2": 1, "q3": 2, "q4": 2}
    )
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 1.0
    record(1, "loan tree rule and counterfactuals", ok, f"rule {rule.render('decision')}; nf {nf_all}", elapsed, 1)
    assert ok


# --------------------------------------------------------------------------- 2

def test_counterfactual_minimality_oracle():
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    schema = mixed_schema()
    trials, agree, max_depth = 1000, 0, 0
    for _ in range(trials):
        tree = random_tree(schema, rng, max_depth=6)
        max_depth = max(max_depth, tree.depth)
        x = random_instance(schema, rng)
        rule = extract_rule(tree, x)
        got = [(normalize_constraints(premise_as_constraints(q.premise), schema), q.outcome,
                q.premise.count_falsified(x)) for q in extract_counterfactuals(tree, rule, x)]
        want = [(normalize_constraints(c, schema), lab, k) for c, lab, k in oracle_counterfactuals(tree, x, rule.outcome)]
        agree += got == want
    elapsed = time.perf_counter() - t0
    ok = agree == trials and elapsed < 30 and max_depth <= 6
    record(2, "counterfactual minimality oracle", ok, f"{agree}/{trials} trees agree (max depth {max_depth})",
           elapsed, 30)
    assert ok


# --------------------------------------------------------------------------- 3

def test_fitness_anchor_values():
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    schema = mixed_schema()
    anchors, violations = 0, 0
    for i in range(10_000):
        x = schema.encode(random_instance(schema, rng))
        if i % 3 == 0:
            # near copies: a single feature changed
            z = x.copy()
            j = int(rng.integers(0, schema.m))
            spec = schema.features[j]
            z[j] = (z[j] + 1) % len(spec.values) if spec.is_categorical else (z[j] + 1 if z[j] < spec.max else z[j] - 1)
        else:
            z = schema.encode(random_instance(schema, rng))
        bx, bz = int(rng.integers(0, 2)), int(rng.integers(0, 2))
        anchors += fitness(FitnessKind.SAME, x, x, bx, bx, distance(NEUCLID, schema, x, x)) != 1.0
        if np.array_equal(x, z):
            continue
        f = fitness(FitnessKind.SAME, x, z, bx, bz, distance(NEUCLID, schema, x, z))
        violations += (f < 1.0) if bz == bx else (f >= 1.0)
    elapsed = time.perf_counter() - t0
    ok = anchors == 0 and violations == 0
    record(3, "fitness anchors", ok, f"{anchors} anchor misses, {violations} property violations over 10^4 pairs",
           elapsed, 60)
    assert ok


# --------------------------------------------------------------------------- 4

def test_german_reproduction(lore_german):
    results, elapsed = lore_german
    m = means(results)
    ok = m["fidelity"] >= 0.90 and m["hit"] >= 0.85 and m["l_fidelity"] >= 0.85 and elapsed < 600
    record(4, "german lore reproduction", ok,
           f"fidelity {m['fidelity']:.3f} (>= 0.90), hit {m['hit']:.3f} (>= 0.85), "
           f"l-fidelity {m['l_fidelity']:.3f} (>= 0.85)", elapsed, 600)
    assert ok


# --------------------------------------------------------------------------- 5

def test_local_beats_global(german, lore_german):
    lore_results, _ = lore_german
    t0 = time.perf_counter()
    global_results = run_method(german, "global", GERMAN_INSTANCES)
    elapsed = time.perf_counter() - t0
    lm, gm = means(lore_results), means(global_results)
    fid_ok = gm["fidelity"] < lm["fidelity"]
    depth_ok = gm["tree_depth"] >= lm["tree_depth"]
    ok = fid_ok and depth_ok and elapsed < 600
    record(5, "local beats global", ok,
           f"fidelity global {gm['fidelity']:.3f} < lore {lm['fidelity']:.3f}: {fid_ok}; "
           f"depth global {gm['tree_depth']:.1f} >= lore mean {lm['tree_depth']:.2f}: {depth_ok}", elapsed, 600)
    assert ok


# --------------------------------------------------------------------------- 6

def test_neighborhood_density_and_balance(two_d):
    t0 = time.perf_counter()
    bb, schema, X = two_d.blackbox, two_d.schema, two_d.test.X
    lore_d, rnd_d, same = [], [], []
    for i in range(20):
        s = instance_seed(0, i)
        params = GAParams(N=1000, G=10, seed=s)
        lore_d.append(build_neighborhood(X[i], bb, params, schema).mean_distance)
        rnd_d.append(gen_rnd(X[i], X, bb, schema, N=1000, seed=s).mean_distance)
        run = genetic_neigh(X[i], FitnessKind.SAME, bb, params, schema, rng=np.random.default_rng(s), population=500)
        same.append(run.same_fraction)
    elapsed = time.perf_counter() - t0
    ld, rd, sf = float(np.mean(lore_d)), float(np.mean(rnd_d)), float(np.mean(same))
    ok = ld < rd and sf >= 0.70 and elapsed < 120
    record(6, "neighborhood density and balance", ok,
           f"mean distance genetic {ld:.3f} < rnd {rd:.3f}; same-label share of the agreement run {sf:.3f} (>= 0.70)",
           elapsed, 120)
    assert ok


# --------------------------------------------------------------------------- 7

def _explain_cli(*extra: str) -> bytes:
    cmd = [sys.executable, "-m", "localrules", "explain", "--seed", "7", "--instances", "3",
           "--format", "structured", *extra]
    return subprocess.run(cmd, check=True, capture_output=True, timeout=300).stdout


def test_determinism_including_external_black_box():
    t0 = time.perf_counter()
    builtin = [_explain_cli() for _ in range(2)]
    stub = f"cmd:{sys.executable} -m localrules.stub --data {GERMAN_CSV} --schema {GERMAN_SCHEMA}"
    external = [_explain_cli("--blackbox", stub) for _ in range(2)]
    elapsed = time.perf_counter() - t0
    same_builtin = builtin[0] == builtin[1] and len(builtin[0]) > 0
    same_external = external[0] == external[1] and len(external[0]) > 0
    ok = same_builtin and same_external and elapsed < 60
    record(7, "determinism", ok,
           f"builtin runs identical: {same_builtin}; stub-served runs identical: {same_external}", elapsed, 60)
    assert ok


# --------------------------------------------------------------------------- 8

def _loan_neighborhood(b_labels, rows=None):
    schema = loan_schema()
    Z = [
        {"age": 22, "job": "clerk", "income": 800},
        {"age": 20, "job": "clerk", "income": 850},
        {"age": 24, "job": "clerk", "income": 950},
        {"age": 23, "job": "other", "income": 500},
        {"age": 16, "job": "other", "income": 500},
        {"age": 30, "job": "clerk", "income": 1000},
        {"age": 40, "job": "other", "income": 1200},
        {"age": 50, "job": "clerk", "income": 2000},
    ]
    idx = list(range(8)) if rows is None else rows
    X = schema.encode_many([Z[i] for i in idx])
    x = schema.encode(Z[0])
    return make_neighborhood(X, np.asarray(b_labels)[idx], "fixture", x, 0, schema)


def test_metric_unit_values():
    t0 = time.perf_counter()
    tree, schema = loan_tree(), loan_schema()
    x = {"age": 22, "job": "clerk", "income": 800}
    xr = schema.encode(x)
    rule = extract_rule(tree, x)
    phi = extract_counterfactuals(tree, rule, x)
    b = [0, 1, 1, 0, 0, 0, 1, 1]  # the tree says [0, 0, 1, 1, 0, 0, 1, 1]
    Z = _loan_neighborhood(b)

    class _Expl:
        counterfactual_rules = phi
        counterfactual_instances = [counterfactual_instance(q, x, schema) for q in phi]

    income_bb = FunctionBlackBox(schema, lambda X: (X[:, 2] > 900).astype(int))
    checks = {
        "f1 identical": (f1([0, 1, 1, 0], [0, 1, 1, 0]), 1.0),
        "f1 all-positive vs half": (f1([1, 1, 1, 1], [1, 1, 0, 0]), 2 / 3),
        "f1 disjoint": (f1([1, 1, 0, 0], [0, 0, 1, 1]), 0.0),
        "f1 no positives": (f1([0, 0], [0, 0]), 1.0),
        "hit agree": (hit(tree, ConstantBlackBox(schema, "deny"), xr), 1),
        "hit disagree": (hit(tree, ConstantBlackBox(schema, "grant"), xr), 0),
        "fidelity": (fidelity(tree, None, Z), 0.75),
        "l-fidelity": (l_fidelity(tree, None, Z, rule), 0.0),
        "l-fidelity agreeing": (l_fidelity(tree, None, _loan_neighborhood([0] * 8), rule), 1.0),
        "l-fidelity empty cover": (l_fidelity(tree, None, _loan_neighborhood(b, rows=[3, 4, 5, 6]), rule), None),
        "cl-fidelity": (cl_fidelity(tree, None, Z, phi), 2 / 3),
        "cl-fidelity empty cover": (cl_fidelity(tree, None, _loan_neighborhood(b, rows=[0, 1, 4]), phi), None),
        "c-hit aligned": (c_hit(FunctionBlackBox(schema, tree.predict), _Expl), 1.0),
        "c-hit constant": (c_hit(ConstantBlackBox(schema, "deny"), _Expl), 0.0),
        "c-hit half": (c_hit(income_bb, _Expl), 0.5),
    }

    class _NoPhi:
        counterfactual_rules = []
        counterfactual_instances = []

    checks["c-hit without counterfactuals"] = (c_hit(income_bb, _NoPhi), None)
    recs = [EvalRecord(0, 1, 1.0, None, None, 0.5, 3, 3, 1), EvalRecord(1, 0, 0.5, 1.0, 1.0, None, 2, 2, None)]
    agg = aggregate(recs)
    checks["aggregate skips undefined"] = ((agg["l_fidelity"]["mean"], agg["l_fidelity"]["skipped"]), (1.0, 1))
    checks["aggregate mean/std"] = ((agg["fidelity"]["mean"], agg["fidelity"]["std"]), (0.75, 0.25))

    def same(got, want):
        if isinstance(want, tuple):
            return all(same(g, w) for g, w in zip(got, want))
        if want is None or got is None:
            return got is want
        return math.isclose(got, want, rel_tol=0, abs_tol=1e-12)

    failed = [name for name, (got, want) in checks.items() if not same(got, want)]
    elapsed = time.perf_counter() - t0
    ok = not failed and elapsed < 1.0
    record(8, "metric unit suite", ok, f"{len(checks) - len(failed)}/{len(checks)} hand values match"
           + (f"; failed {failed}" if failed else ""), elapsed, 1)
    assert ok


# --------------------------------------------------------------------------- 9

def test_distance_robustness(german, lore_german):
    base = means(lore_german[0])
    t0 = time.perf_counter()
    deltas = {}
    for kind in (COSINE, MINMAX):
        m = means(run_method(german, "lore", GERMAN_INSTANCES, ExplainParams(ga=GAParams(N=1000, G=10), distance=kind)))
        deltas[kind] = (abs(m["fidelity"] - base["fidelity"]), abs(m["hit"] - base["hit"]))
    elapsed = time.perf_counter() - t0
    ok = all(df < 0.05 and dh < 0.05 for df, dh in deltas.values()) and elapsed < 1800
    detail = "; ".join(f"{k}: |d fidelity| {df:.3f}, |d hit| {dh:.3f}" for k, (df, dh) in deltas.items())
    record(9, "distance robustness", ok, detail + " (each < 0.05)", elapsed, 1800)
    assert ok


if __name__ == "__main__":
    code = pytest.main([__file__, "-q"])
    print("\n".join(ACCEPTANCE_LINES))
    sys.exit(code)
