"""Simulated black-box providers and the access meter.

A provider answers ``query(source)`` with its top-K list for ``source``. The
list never contains the source or any item of the provider's configured
history, and score ties are broken by ascending item id.
"""

from __future__ import annotations

import threading
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .core import ShortListWarning


class OracleError(RuntimeError):
    """The provider could not answer a query."""


class Provider:
    """Base class: subclasses implement ``_ranked(source)`` (all items, best first)."""

    def __init__(self, n_items: int, K: int, history: Iterable[int] = ()):
        if K < 1:
            raise ValueError("K must be positive")
        self.n_items = int(n_items)
        self.K = int(K)
        self.history = frozenset(int(h) for h in history)

    def _ranked(self, source: int) -> Sequence[int]:
        raise NotImplementedError

    def _copy_with(self, history) -> "Provider":
        new = object.__new__(type(self))
        new.__dict__.update(self.__dict__)
        new.history = frozenset(int(h) for h in history)
        return new

    def with_history(self, history: Iterable[int]) -> "Provider":
        """The same provider as seen by a user who has interacted with ``history``."""
        return self._copy_with(history)

    def query(self, source: int) -> list[int]:
        source = int(source)
        if not 0 <= source < self.n_items:
            raise OracleError(f"unknown item {source}")
        out = []
        for j in self._ranked(source):
            j = int(j)
            if j == source or j in self.history:
                continue
            out.append(j)
            if len(out) == self.K:
                break
        if len(out) < self.K:
            warnings.warn(f"provider list for {source} has {len(out)} < K={self.K} items", ShortListWarning)
        return out

    __call__ = query

    @property
    def universe(self) -> range:
        return range(self.n_items)


class ScoreProvider(Provider):
    """Top-K by a score row ``score_fn(source) -> (n,)``; higher is better."""

    def __init__(self, score_fn: Callable[[int], np.ndarray], n_items: int, K: int, history: Iterable[int] = ()):
        super().__init__(n_items, K, history)
        self.score_fn = score_fn
        self._orders: dict[int, np.ndarray] = {}

    def scores(self, source: int) -> np.ndarray:
        return np.asarray(self.score_fn(int(source)), dtype=float)

    def _ranked(self, source: int) -> np.ndarray:
        order = self._orders.get(source)
        if order is None:
            s = self.scores(source)
            # primary key -score, secondary ascending id
            order = np.lexsort((np.arange(self.n_items), -s))
            self._orders[source] = order
        return order


class TableProvider(Provider):
    """Provider backed by explicit ranked lists (fixtures, crawled CSVs, live dumps)."""

    def __init__(self, lists: Mapping[int, Sequence[int]], n_items: int | None = None, K: int | None = None,
                 history: Iterable[int] = ()):
        lists = {int(i): [int(j) for j in v] for i, v in lists.items()}
        if n_items is None:
            n_items = 1 + max([*lists, *(j for v in lists.values() for j in v)])
        if K is None:
            K = max((len(v) for v in lists.values()), default=1)
        super().__init__(n_items, K, history)
        self.lists = lists

    def _ranked(self, source: int) -> Sequence[int]:
        try:
            return self.lists[source]
        except KeyError:
            raise OracleError(f"no recommendation list for item {source}") from None


def standardize(features: np.ndarray) -> np.ndarray:
    """Zero-mean unit-variance columns; zero-variance columns are dropped."""
    x = np.asarray(features, dtype=float)
    sd = x.std(axis=0)
    keep = sd > 0
    return (x[:, keep] - x[:, keep].mean(axis=0)) / sd[keep]


def knn_provider(features: np.ndarray, K: int, standardize_features: bool = True) -> ScoreProvider:
    """K nearest items by Euclidean distance over (standardized) features."""
    x = standardize(features) if standardize_features else np.asarray(features, dtype=float)
    if len(x) < K + 1:
        raise ValueError(f"need at least K+1={K + 1} items, got {len(x)}")

    def score(i):
        return -np.sqrt(((x - x[i]) ** 2).sum(axis=1))

    return ScoreProvider(score, len(x), K)


def cosine_provider(matrix: np.ndarray, K: int) -> ScoreProvider:
    """Top-K items by cosine similarity of interaction-matrix columns (users x items)."""
    m = np.asarray(matrix, dtype=float)
    n = m.shape[1]
    if n < K + 1:
        raise ValueError(f"need at least K+1={K + 1} items, got {n}")
    norms = np.linalg.norm(m, axis=0)
    safe = np.where(norms > 0, norms, 1.0)
    unit = m / safe

    def score(i):
        s = unit.T @ unit[:, i]
        s[norms == 0] = -np.inf
        return s

    return ScoreProvider(score, n, K)


def dot_provider(embeddings: np.ndarray, K: int) -> ScoreProvider:
    """Top-K items by inner product of item embeddings."""
    e = np.asarray(embeddings, dtype=float)
    if len(e) < K + 1:
        raise ValueError(f"need at least K+1={K + 1} items, got {len(e)}")
    return ScoreProvider(lambda i: e @ e[i], len(e), K)


@dataclass
class AccessMeter:
    """Counts of oracle calls: ``total`` calls and ``distinct`` source pages."""

    total: int = 0
    distinct: int = 0


class MeteredProvider:
    """Forwards queries to a provider, memoizing pages and counting accesses."""

    def __init__(self, oracle):
        self.oracle = oracle
        self.meter = AccessMeter()
        self._cache: dict[int, list[int]] = {}
        self._lock = threading.Lock()

    @property
    def K(self) -> int:
        return self.oracle.K

    @property
    def n_items(self) -> int:
        return self.oracle.n_items

    def query(self, source: int) -> list[int]:
        source = int(source)
        with self._lock:
            self.meter.total += 1
            hit = self._cache.get(source)
            if hit is None:
                hit = self._cache[source] = list(self.oracle.query(source))
                self.meter.distinct += 1
            return list(hit)

    __call__ = query

    @property
    def visited(self) -> frozenset:
        return frozenset(self._cache)


def with_meter(oracle) -> tuple[MeteredProvider, AccessMeter]:
    metered = MeteredProvider(oracle)
    return metered, metered.meter
