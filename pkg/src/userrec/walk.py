"""Query-local recommenders: PrivateWalk (rank-discounted random walks) and Consul (bounded DFS).

Both touch the provider only through ``oracle.query``; pass a
:class:`~userrec.provider.MeteredProvider` to count page accesses.

Randomness comes from a ``numpy.random.Generator`` (PCG64 via
``default_rng(seed)``). Each rank draw consumes exactly one ``rng.random()``;
each fallback draw consumes one ``rng.integers(len(universe))``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .core import AttributeTable, FairnessParams, GroupLedger, ShortListWarning, can_add, rank_discount

MAX_FALLBACK_DRAWS = 10**6


class FallbackExhausted(RuntimeError):
    pass


@dataclass(frozen=True)
class WalkParams:
    L_max: int = 100
    seed: int = 0

    def __post_init__(self):
        if int(self.L_max) != self.L_max or self.L_max < 1:
            raise ValueError(f"L_max must be a positive integer, got {self.L_max}")


CONSUL_DEFAULT = WalkParams(L_max=10)


@lru_cache(maxsize=None)
def _rank_cdf(K: int) -> np.ndarray:
    w = np.array([rank_discount(r) for r in range(1, K + 1)])
    cdf = np.cumsum(w / w.sum())
    cdf[-1] = 1.0
    return cdf


def rank_discount_sample(K: int, rng: np.random.Generator) -> int:
    """Draw a 1-based rank with probability proportional to ``1/log2(r+1)``."""
    if K < 1:
        raise ValueError("K must be >= 1")
    return min(int(np.searchsorted(_rank_cdf(K), rng.random(), side="right")) + 1, K)


class _FairList:
    """The list under construction with its group ledger and exclusion set."""

    def __init__(self, attrs: AttributeTable, params: FairnessParams, excluded: Iterable[int]):
        self.attrs = attrs
        self.params = params
        self.items: list[int] = []
        self.ledger = GroupLedger.empty(attrs.n_groups)
        self.excluded = set(excluded)

    @property
    def full(self) -> bool:
        return len(self.items) >= self.params.K

    def admissible(self, j: int) -> bool:
        return j not in self.excluded and can_add(self.ledger, len(self.items), self.attrs.group_of(j), self.params)

    def push(self, j: int) -> None:
        self.items.append(j)
        self.ledger.add(self.attrs.group_of(j))
        self.excluded.add(j)

    def fallback(self, universe: np.ndarray, rng: np.random.Generator, trace: list | None) -> bool:
        """Add one uniformly drawn admissible item; False when none exists."""
        if not any(self.admissible(int(j)) for j in universe):
            return False
        for _ in range(MAX_FALLBACK_DRAWS):
            j = int(universe[rng.integers(len(universe))])
            if self.admissible(j):
                self.push(j)
                if trace is not None:
                    trace.append(j)
                return True
        raise FallbackExhausted(f"no admissible item after {MAX_FALLBACK_DRAWS} uniform draws")


def _universe(oracle, universe) -> np.ndarray:
    if universe is None:
        universe = range(oracle.n_items)
    return np.asarray(sorted(int(i) for i in universe), dtype=np.int64)


def _finish(state: _FairList) -> list[int]:
    if not state.full:
        warnings.warn(f"only {len(state.items)} of K={state.params.K} items found", ShortListWarning)
    return state.items


def privatewalk_recommend(oracle, source: int, attrs: AttributeTable, params: FairnessParams,
                          walk: WalkParams = WalkParams(), history: Iterable[int] = (),
                          universe: Sequence[int] | None = None, rng: np.random.Generator | None = None,
                          fallback_trace: list | None = None) -> list[int]:
    """One restarted random walk per slot; the first admissible item reached is taken.

    Items added by the uniform fallback are appended to ``fallback_trace`` when given.
    """
    if rng is None:
        rng = np.random.default_rng(walk.seed)
    uni = _universe(oracle, universe)
    state = _FairList(attrs, params, {int(source), *map(int, history)})
    for _ in range(params.K):
        cur = int(source)
        found = False
        for _ in range(walk.L_max):
            lst = oracle.query(cur)
            if not lst:
                break
            cur = lst[rank_discount_sample(len(lst), rng) - 1]
            if state.admissible(cur):
                state.push(cur)
                found = True
                break
        if not found and not state.fallback(uni, rng, fallback_trace):
            break
    return _finish(state)


def consul_recommend(oracle, source: int, attrs: AttributeTable, params: FairnessParams,
                     walk: WalkParams = CONSUL_DEFAULT, history: Iterable[int] = (),
                     universe: Sequence[int] | None = None, rng: np.random.Generator | None = None,
                     fallback_trace: list | None = None) -> list[int]:
    """Depth-first search from ``source`` over at most ``walk.L_max`` pages.

    Every recommendation on a visited page is appended when it keeps the
    per-group minimum reachable; children are stacked so that rank 1 is
    explored next.
    """
    if rng is None:
        rng = np.random.default_rng(walk.seed)
    state = _FairList(attrs, params, {int(source), *map(int, history)})
    stack: list[int] = []
    visited: set[int] = set()
    p = int(source)
    for _ in range(walk.L_max):
        while p in visited:
            if not stack:
                break
            p = stack.pop()
        if p in visited:
            break
        visited.add(p)
        lst = oracle.query(p)
        for j in lst:
            if state.admissible(j):
                state.push(j)
            if state.full:
                return state.items
        stack.extend(reversed(lst))
    uni = _universe(oracle, universe)
    while not state.full:
        if not state.fallback(uni, rng, fallback_trace):
            break
    return _finish(state)
