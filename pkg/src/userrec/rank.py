"""PrivateRank: personalized PageRank over the crawled network plus greedy fair selection."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import AttributeTable, FairnessParams, GroupLedger, LOG_BASE, ShortListWarning, can_add
from .network import RecNetwork, RowNormalizedNetwork, crawl, row_normalize, transpose_apply


@dataclass(frozen=True)
class PprParams:
    c: float = 0.01
    L: int = 10

    def __post_init__(self):
        if not 0 < self.c < 1:
            raise ValueError(f"damping factor must lie in (0, 1), got {self.c}")
        if int(self.L) != self.L or self.L < 0:
            raise ValueError(f"L must be a non-negative integer, got {self.L}")


def ppr_cpi(net: RowNormalizedNetwork, source: int, params: PprParams) -> np.ndarray:
    """Cumulative power iteration ``(1-c) * sum_{k<=L} (c Ã^T)^k e_source``."""
    if not 0 <= source < net.n:
        raise IndexError(f"source {source} outside 0..{net.n - 1}")
    x = np.zeros(net.n)
    x[source] = 1.0
    acc = x.copy()
    for _ in range(params.L):
        x = params.c * transpose_apply(net, x)
        acc += x
    return (1.0 - params.c) * acc


def consistency_threshold(K: int) -> float:
    """Damping factor bound below which PrivateRank with tau=0 returns the provider's list."""
    if K < 1:
        raise ValueError("K must be >= 1")
    lg = math.log(K + 1, LOG_BASE)
    return 1.0 / ((K + 1) ** 2 * lg ** 2)


def descending_order(scores: np.ndarray) -> np.ndarray:
    """Indices by descending score, ties by ascending index."""
    return np.lexsort((np.arange(len(scores)), -np.asarray(scores)))


def fair_select(order: Iterable[int], attrs: AttributeTable, params: FairnessParams,
                exclude: Iterable[int] = ()) -> list[int]:
    """Greedily take items in ``order`` that are not excluded and pass ``can_add``."""
    skip = set(exclude)
    ledger = GroupLedger.empty(attrs.n_groups)
    out: list[int] = []
    for i in order:
        i = int(i)
        if i in skip:
            continue
        g = attrs.group_of(i)
        if can_add(ledger, len(out), g, params):
            out.append(i)
            ledger.add(g)
            skip.add(i)
            if len(out) == params.K:
                break
    if len(out) < params.K:
        warnings.warn(f"only {len(out)} of K={params.K} items could be selected", ShortListWarning)
    return out


def privaterank_recommend(net: RowNormalizedNetwork, source: int, attrs: AttributeTable,
                          params: FairnessParams, ppr: PprParams = PprParams(),
                          history: Iterable[int] = ()) -> list[int]:
    scores = ppr_cpi(net, source, ppr)
    return fair_select(descending_order(scores), attrs, params, exclude={source, *history})


class PrivateRank:
    """Crawl a provider once and answer fair queries from the cached network."""

    def __init__(self, oracle, attrs: AttributeTable, ppr: PprParams = PprParams()):
        self.network: RecNetwork = crawl(oracle)
        self.normalized = row_normalize(self.network)
        self.attrs = attrs
        self.ppr = ppr

    def recommend(self, source: int, params: FairnessParams, history: Iterable[int] = ()) -> list[int]:
        params.validate(self.attrs)
        return privaterank_recommend(self.normalized, source, self.attrs, params, self.ppr, history)
