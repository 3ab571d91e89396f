"""Accuracy metrics, baseline recommenders, and the tau sweep producing trade-off reports."""

from __future__ import annotations

import csv
import io
import json
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .bench import Dataset, Task
from .core import FairnessParams, ShortListWarning, least_ratio, list_entropy, rank_discount
from .network import crawl, row_normalize
from .provider import ScoreProvider, with_meter
from .rank import PprParams, descending_order, fair_select, privaterank_recommend
from .walk import CONSUL_DEFAULT, WalkParams, consul_recommend, privatewalk_recommend

# ---------------------------------------------------------------- metrics


def precision_same_label(lists: Mapping[int, Sequence[int]], labels, K: int | None = None) -> float:
    """Mean over sources of the share of recommended items carrying the source's label."""
    if not lists:
        raise ValueError("no lists")
    labels = np.asarray(labels)
    vals = []
    for source, items in lists.items():
        items = np.asarray(list(items), dtype=np.int64)
        if items.size and (items.max() >= len(labels) or items.min() < 0):
            raise KeyError(f"unlabelled item in list of {source}")
        denom = K if K is not None else len(items)
        vals.append(float((labels[items] == labels[source]).sum()) / denom if denom else 0.0)
    return float(np.mean(vals))


def recall_at_k(items: Sequence[int], positive: int) -> int:
    return int(positive in items)


def ndcg_at_k(items: Sequence[int], positive: int) -> float:
    """Single-positive nDCG: ``1/log2(rank+1)`` at the positive's rank, else 0."""
    for rank, j in enumerate(items, start=1):
        if j == positive:
            return rank_discount(rank)
    return 0.0


def bootstrap_mean_ci(values, n_resamples: int = 1000, confidence: float = 0.95, seed: int = 0) -> tuple[float, float]:
    values = np.asarray(values, dtype=float)
    if np.ptp(values) == 0:
        return float(values[0]), float(values[0])
    res = stats.bootstrap((values,), np.mean, n_resamples=n_resamples, confidence_level=confidence,
                          method="percentile", random_state=np.random.default_rng(seed))
    return float(res.confidence_interval.low), float(res.confidence_interval.high)


# ---------------------------------------------------------------- recommenders


@dataclass
class Outcome:
    items: list
    accesses: int | None


def _rng(seed: int, source: int) -> np.random.Generator:
    return np.random.default_rng([seed, source])


class Recommender:
    """Uniform call signature used by the sweep: ``(dataset, task, params, seed) -> Outcome``."""

    name = "base"

    def __call__(self, data: Dataset, task: Task, params: FairnessParams, seed: int) -> Outcome:
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


class ProviderAsIs(Recommender):
    name = "provider"

    def __call__(self, data, task, params, seed):
        oracle, meter = with_meter(data.provider.with_history(task.history))
        return Outcome(oracle.query(task.source)[: params.K], meter.distinct)


class RandomFair(Recommender):
    name = "random_fair"

    def __call__(self, data, task, params, seed):
        order = _rng(seed, task.source).permutation(data.n_items)
        return Outcome(fair_select(order, data.attrs, params, {task.source, *task.history}), 0)


class OracleFair(Recommender):
    """Re-ranks the provider's full score row; needs a :class:`ScoreProvider`."""

    name = "oracle_fair"

    def __call__(self, data, task, params, seed):
        if not isinstance(data.provider, ScoreProvider):
            raise TypeError("oracle_fair needs the provider's score table")
        order = descending_order(data.provider.scores(task.source))
        return Outcome(fair_select(order, data.attrs, params, {task.source, *task.history}), None)


class PrivateRankMethod(Recommender):
    name = "privaterank"

    def __init__(self, ppr: PprParams = PprParams()):
        self.ppr = ppr
        self._cache: dict = {}

    def network(self, data: Dataset, history: frozenset):
        key = (data.name, history)
        if key not in self._cache:
            oracle, meter = with_meter(data.provider.with_history(history))
            self._cache[key] = (row_normalize(crawl(oracle)), meter.distinct)
        return self._cache[key]

    def __call__(self, data, task, params, seed):
        net, accesses = self.network(data, task.history)
        items = privaterank_recommend(net, task.source, data.attrs, params, self.ppr, task.history)
        return Outcome(items, accesses)

    def __getstate__(self):
        return {"ppr": self.ppr, "_cache": {}}

    def __repr__(self):
        return f"PrivateRankMethod(c={self.ppr.c}, L={self.ppr.L})"


class _LocalMethod(Recommender):
    default = WalkParams()
    func = None

    def __init__(self, L_max: int | None = None):
        self.L_max = self.default.L_max if L_max is None else L_max

    def __call__(self, data, task, params, seed):
        oracle, meter = with_meter(data.provider.with_history(task.history))
        items = type(self).func(oracle, task.source, data.attrs, params, WalkParams(self.L_max, seed),
                                task.history, rng=_rng(seed, task.source))
        return Outcome(items, meter.distinct)

    def __repr__(self):
        return f"{type(self).__name__}(L_max={self.L_max})"


class PrivateWalkMethod(_LocalMethod):
    name = "privatewalk"
    func = staticmethod(privatewalk_recommend)


class ConsulMethod(_LocalMethod):
    name = "consul"
    default = CONSUL_DEFAULT
    func = staticmethod(consul_recommend)


METHODS = {
    "provider": ProviderAsIs,
    "privaterank": PrivateRankMethod,
    "privatewalk": PrivateWalkMethod,
    "consul": ConsulMethod,
    "random_fair": RandomFair,
    "oracle_fair": OracleFair,
}
SOUND_METHODS = ("privaterank", "privatewalk", "consul", "random_fair", "oracle_fair")


def make_method(name: str, **options) -> Recommender:
    try:
        cls = METHODS[name]
    except KeyError:
        raise ValueError(f"unknown method {name!r}; choose from {sorted(METHODS)}") from None
    if name == "privaterank":
        return cls(PprParams(**options))
    return cls(**options)


# ---------------------------------------------------------------- sweep

REPORT_COLUMNS = ("dataset", "method", "tau", "K", "n_runs", "least_ratio", "entropy", "accuracy_metric",
                  "accuracy", "recall", "accesses", "short_lists", "violations", "error")


@dataclass
class TradeoffRow:
    dataset: str
    method: str
    tau: int
    K: int
    n_runs: int = 0
    least_ratio: float | None = None
    entropy: float | None = None
    accuracy_metric: str = ""
    accuracy: float | None = None
    recall: float | None = None
    accesses: float | None = None
    short_lists: int = 0
    violations: int = 0
    error: str = ""
    per_run: dict = field(default_factory=dict, repr=False)


@dataclass
class TradeoffReport:
    rows: list

    def row(self, method: str, tau: int, dataset: str | None = None) -> TradeoffRow:
        for r in self.rows:
            if r.method == method and r.tau == tau and (dataset is None or r.dataset == dataset):
                return r
        raise KeyError((method, tau, dataset))

    def to_records(self) -> list[dict]:
        return [{k: getattr(r, k) for k in REPORT_COLUMNS} for r in self.rows]

    def to_json(self) -> str:
        return json.dumps({"schema": "userrec.tradeoff/1", "columns": list(REPORT_COLUMNS),
                           "rows": self.to_records()}, indent=2, sort_keys=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(REPORT_COLUMNS)
        for rec in self.to_records():
            out.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in rec.values()])
        return buf.getvalue()


REPORT_SCHEMA = {
    "schema": "userrec.tradeoff/1",
    "columns": {
        "dataset": "dataset name",
        "method": "recommender name",
        "tau": "per-group minimum",
        "K": "list length",
        "n_runs": "number of (task, seed) runs",
        "least_ratio": "mean least ratio over non-empty lists",
        "entropy": "mean base-2 group entropy",
        "accuracy_metric": "precision (same label) or ndcg (leave-one-out)",
        "accuracy": "mean of accuracy_metric",
        "recall": "mean recall@K (leave-one-out datasets only)",
        "accesses": "mean distinct provider pages queried; empty when not metered",
        "short_lists": "runs returning fewer than K items",
        "violations": "full-length lists with some group below tau",
        "error": "failure message when the cell could not run",
    },
}


def _mean(xs):
    return float(np.mean(xs)) if len(xs) else None


def run_cell(data: Dataset, method: Recommender, tau: int, K: int, seeds: Sequence[int]) -> TradeoffRow:
    row = TradeoffRow(data.name, method.name, tau, K)
    try:
        params = FairnessParams.for_attributes(K, tau, data.attrs)
        lr, ent, acc, rec, acc_n, ratios = [], [], [], [], [], []
        metric = "precision" if data.labels is not None else "ndcg"
        for seed in seeds:
            for task in data.tasks:
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", ShortListWarning)
                    out = method(data, task, params, seed)
                items = list(out.items)
                row.n_runs += 1
                if len(items) < K:
                    row.short_lists += 1
                else:
                    counts = np.bincount(data.attrs.codes[items], minlength=data.attrs.n_groups)
                    row.violations += int(counts.min() < tau)
                if items:
                    r = least_ratio(items, data.attrs)
                    ratios.append(r)
                    lr.append(float(r))
                    ent.append(list_entropy(items, data.attrs))
                if metric == "precision":
                    acc.append(precision_same_label({task.source: items}, data.labels, K))
                elif task.positive is not None:
                    acc.append(ndcg_at_k(items, task.positive))
                    rec.append(recall_at_k(items, task.positive))
                if out.accesses is not None:
                    acc_n.append(out.accesses)
        row.least_ratio, row.entropy = _mean(lr), _mean(ent)
        row.accuracy_metric, row.accuracy, row.recall = metric, _mean(acc), _mean(rec)
        row.accesses = _mean(acc_n)
        row.per_run = {"accuracy": acc, "least_ratio": ratios, "accesses": acc_n}
    except Exception as exc:  # recorded per row; the sweep continues
        row.error = f"{type(exc).__name__}: {exc}"
    return row


def _run_cell_args(args):
    return run_cell(*args)


def sweep(methods: Iterable[Recommender], taus: Iterable[int], datasets: Iterable[Dataset],
          seeds: Sequence[int] = (0,), K: int = 10, jobs: int = 1) -> TradeoffReport:
    """Evaluate every (dataset, method, tau) cell; rows come out in that order, taus ascending."""
    methods, datasets = list(methods), list(datasets)
    taus = sorted(set(int(t) for t in taus))
    cells = [(d, m, t, K, tuple(seeds)) for d in datasets for m in methods for t in taus]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_cell_args, cells))
    else:
        rows = [run_cell(*c) for c in cells]
    return TradeoffReport(rows)


def monotone_nondecreasing(values: Sequence[float], eps: float = 1e-12) -> bool:
    return all(b >= a - eps for a, b in zip(values, values[1:]))
