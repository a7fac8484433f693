"""Batch driver shared by the CLI: data preparation, per-method explanation, scoring."""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .baselines import METHODS, gen_crn, gen_global, gen_rnd, gen_ros
from .blackbox import BlackBox, connect_external, train_bagged_ensemble
from .data import (Dataset, FeatureSchema, build_empirical_distributions, impute_missing, load_dataset,
                   train_test_split)
from .explanation import ExplainParams, Explanation, explain, explain_with
from .genetic import make_neighborhood
from .metrics import METRIC_FIELDS, EvalRecord, aggregate, c_hit, cl_fidelity, hit, l_fidelity
from .tree import build_tree

DEFAULT_SEED = 0
BUILTIN_ENSEMBLE = "builtin:ensemble"
REFERENCE_SPLITS = ("test", "train", "all")


@dataclass
class Setup:
    train: Dataset
    test: Dataset
    schema: FeatureSchema  # carries the empirical distributions used by mutation
    blackbox: BlackBox

    @property
    def target(self) -> str:
        return self.schema.target


def prepare_data(data: str | Path, schema: str | Path | FeatureSchema, seed: int = DEFAULT_SEED
                 ) -> tuple[Dataset, Dataset]:
    ds = impute_missing(load_dataset(data, schema))
    return train_test_split(ds, 0.8, seed)


def _reference(train: Dataset, test: Dataset, reference: str) -> Dataset:
    if reference == "test":
        return test
    if reference == "train":
        return train
    if reference == "all":
        return Dataset(test.schema, np.vstack([train.X, test.X]), np.concatenate([train.y, test.y]))
    return impute_missing(load_dataset(reference, test.schema))


def reference_setup(
    data: str | Path,
    schema: str | Path | FeatureSchema,
    trees: int = 100,
    seed: int = DEFAULT_SEED,
    reference: str = "test",
    blackbox: str = BUILTIN_ENSEMBLE,
    timeout: float = 60.0,
) -> Setup:
    """Load, impute, split 80/20 and attach a black box.

    ``seed`` fixes the split and the built-in ensemble, so the model being
    explained does not move when explanation seeds change.
    """
    train, test = prepare_data(data, schema, seed)
    ref_schema = build_empirical_distributions(_reference(train, test, reference))
    if blackbox == BUILTIN_ENSEMBLE:
        bb = train_bagged_ensemble(train, tree_count=trees, seed=seed)
    else:
        bb = connect_external(blackbox, ref_schema, timeout=timeout)
    return Setup(train, test, ref_schema, bb)


def parse_instances(selector: str, n: int) -> list[int]:
    """``all``, ``i``, ``a:b`` (half open) or a comma list of those."""
    if selector.strip() == "all":
        return list(range(n))
    out: list[int] = []
    for part in selector.split(","):
        part = part.strip()
        if ":" in part:
            a, b = part.split(":", 1)
            lo = int(a) if a else 0
            hi = int(b) if b else n
            if not 0 <= lo < hi <= n:
                raise ValueError(f"instance range {part!r} outside 0..{n}")
            out.extend(range(lo, hi))
        else:
            i = int(part)
            if not 0 <= i < n:
                raise ValueError(f"instance index {i} outside 0..{n - 1}")
            out.append(i)
    return out


def instance_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


@dataclass(frozen=True)
class Job:
    method: str
    params: ExplainParams
    seed: int


def _local(job: Job, setup: Setup, index: int) -> Explanation:
    x = setup.test.X[index]
    bb, schema = setup.blackbox, setup.schema
    s = instance_seed(job.seed, index)
    if job.method == "lore":
        return explain(x, bb, schema, replace(job.params, ga=replace(job.params.ga, seed=s)))
    N, dk = job.params.ga.N, job.params.distance
    before = bb.queries
    if job.method == "crn":
        Z = gen_crn(x, setup.test.X, bb, schema, distance_kind=dk)
    elif job.method == "rnd":
        Z = gen_rnd(x, setup.test.X, bb, schema, N, s, distance_kind=dk)
    elif job.method == "ros":
        Z = gen_ros(x, setup.test.X, bb, schema, N, s, distance_kind=dk)
    else:
        raise ValueError(f"unknown method {job.method!r}; expected one of {', '.join(METHODS)}")
    c = build_tree(Z.X, Z.y, schema, job.params.tree)
    return explain_with(x, Z, c, schema, Z.bx, bb.queries - before)


def score(index: int, e: Explanation, bb: BlackBox, x: np.ndarray) -> EvalRecord:
    c, Z = e.tree, e.neighborhood
    bx = bb.schema.label_index(e.blackbox_label)
    return EvalRecord(
        index=index,
        hit=hit(c, bb, x, bx),
        fidelity=e.diagnostics["fidelity"],
        l_fidelity=l_fidelity(c, None, Z, e.rule),
        c_hit=c_hit(bb, e),
        cl_fidelity=cl_fidelity(c, None, Z, e.counterfactual_rules),
        tree_depth=c.depth,
        rule_length=len(e.rule.premise),
        nf=min(e.nf) if e.nf else None,
    )


def _one(job: Job, setup: Setup, index: int) -> tuple[EvalRecord, Explanation]:
    e = _local(job, setup, index)
    return score(index, e, setup.blackbox, setup.test.X[index]), e


_worker: tuple[Job, Setup] | None = None


def _init_worker(job: Job, setup: Setup) -> None:
    global _worker
    _worker = (job, setup)


def _run_in_worker(index: int):
    job, setup = _worker
    return _one(job, setup, index)


def run_method(
    setup: Setup,
    method: str,
    indices: Sequence[int],
    params: ExplainParams = ExplainParams(),
    seed: int = DEFAULT_SEED,
    jobs: int = 1,
) -> list[tuple[EvalRecord, Explanation]]:
    """Explain and score every index; results come back in ``indices`` order."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {', '.join(METHODS)}")
    if method == "global":
        # one surrogate over the whole test set, shared by every instance
        X, bb, schema = setup.test.X, setup.blackbox, setup.schema
        before = bb.queries
        Z = gen_global(X, bb, schema, distance_kind=params.distance)
        c = build_tree(Z.X, Z.y, schema, params.tree)
        queries = bb.queries - before
        out = []
        for i in indices:
            bx = int(bb.predict(X[i][None, :])[0])
            Zi = make_neighborhood(Z.X, Z.y, "global", X[i], bx, schema, params.distance)
            e = explain_with(X[i], Zi, c, schema, bx, queries)
            out.append((score(i, e, bb, X[i]), e))
        return out
    job = Job(method, params, seed)
    if jobs > 1 and len(indices) > 1:
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=(job, setup)) as pool:
            return list(pool.map(_run_in_worker, indices))
    return [_one(job, setup, i) for i in indices]


def format_mean_std(stat: dict) -> str:
    if stat["mean"] is None:
        return "n/a"
    return f"{stat['mean']:.3f} ± {stat['std']:.3f}"


def records_csv(records: Sequence[EvalRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("index",) + METRIC_FIELDS)
    for r in records:
        row = r.as_dict()
        w.writerow([r.index] + ["" if row[f] is None else _num(row[f]) for f in METRIC_FIELDS])
    return buf.getvalue()


def _num(v) -> str:
    return str(v) if isinstance(v, int) else f"{v:.6f}"


def evaluation_report(method: str, records: Sequence[EvalRecord], seed: int) -> dict:
    return {
        "method": method,
        "seed": seed,
        "instances": len(records),
        "aggregate": aggregate(records),
        "records": [r.as_dict() for r in records],
    }


def comparison_table(reports: Sequence[dict]) -> str:
    """Methods as rows, metrics as ``mean ± std`` columns, in the order given."""
    header = ["method"] + list(METRIC_FIELDS)
    rows = [[rep["method"]] + [format_mean_std(rep["aggregate"][f]) for f in METRIC_FIELDS] for rep in reports]
    widths = [max(len(r[k]) for r in [header] + rows) for k in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in [header] + rows]
    return "\n".join(lines) + "\n"


def neighborhood_csv(setup: Setup, e: Explanation) -> str:
    Z, schema = e.neighborhood, setup.schema
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(schema.names + [schema.target, "same_as_x"])
    for row, label in zip(Z.X, Z.y):
        d = schema.decode(row)
        w.writerow([d[n] for n in schema.names] + [schema.labels[label], int(label == Z.bx)])
    return buf.getvalue()


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, allow_nan=False)
