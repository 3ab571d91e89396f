"""The weighted recommendation network crawled from a provider, and its row-normalized operator."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .core import rank_discount


class CrawlError(RuntimeError):
    def __init__(self, item, cause):
        super().__init__(f"crawl failed at item {item}: {cause}")
        self.item = item


@dataclass(frozen=True)
class RecNetwork:
    """Edge ``i -> j`` of weight ``1/log2(k+1)`` when ``j`` is the k-th item of ``i``'s list.

    ``lists[i]`` keeps the crawled list (rank order); ``adjacency`` is CSR.
    """

    n: int
    lists: tuple
    adjacency: sp.csr_matrix

    @property
    def n_edges(self) -> int:
        return int(self.adjacency.nnz)

    def edges(self) -> list[tuple[int, int, int]]:
        return [(i, j, k) for i, lst in enumerate(self.lists) for k, j in enumerate(lst, start=1)]

    @property
    def short_rows(self) -> list[int]:
        K = max((len(lst) for lst in self.lists), default=0)
        return [i for i, lst in enumerate(self.lists) if len(lst) < K]


def from_lists(lists: dict[int, list[int]] | list, n: int) -> RecNetwork:
    if not isinstance(lists, dict):
        lists = dict(enumerate(lists))
    rows, cols, vals = [], [], []
    full = []
    for i in range(n):
        clean = []
        for j in lists.get(i, ()):
            j = int(j)
            if j == i or j in clean:
                continue
            clean.append(j)
        for k, j in enumerate(clean, start=1):
            rows.append(i)
            cols.append(j)
            vals.append(rank_discount(k))
        full.append(tuple(clean))
    adj = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    adj.sort_indices()
    return RecNetwork(n, tuple(full), adj)


def crawl(oracle, items: Iterable[int] | None = None) -> RecNetwork:
    """Query every item of the universe once and assemble the weighted network."""
    n = oracle.n_items
    items = range(n) if items is None else sorted(int(i) for i in items)
    lists = {}
    for i in items:
        try:
            lists[i] = oracle.query(i)
        except Exception as exc:
            raise CrawlError(i, exc) from exc
    return from_lists(lists, n)


@dataclass(frozen=True)
class RowNormalizedNetwork:
    """Rows rescaled to sum to one; ``dangling[i]`` marks rows with no out-edges."""

    n: int
    matrix: sp.csr_matrix
    dangling: np.ndarray


def row_normalize(net: RecNetwork) -> RowNormalizedNetwork:
    a = net.adjacency
    sums = np.asarray(a.sum(axis=1)).ravel()
    dangling = sums == 0
    inv = np.where(dangling, 0.0, 1.0 / np.where(dangling, 1.0, sums))
    m = sp.diags(inv) @ a
    m = sp.csr_matrix(m)
    m.sort_indices()
    return RowNormalizedNetwork(net.n, m, dangling)


def transpose_apply(net: RowNormalizedNetwork, v: np.ndarray) -> np.ndarray:
    """Return ``Ã^T v`` in O(nnz)."""
    v = np.asarray(v, dtype=float)
    if v.shape != (net.n,):
        raise ValueError(f"expected vector of length {net.n}, got shape {v.shape}")
    return net.matrix.T @ v


def save_network(net: RecNetwork, path: str | os.PathLike) -> None:
    """Write ``src,dst,rank`` triples; weights are recomputed from ranks on load."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["src", "dst", "rank"])
        out.writerows(net.edges())
    os.replace(tmp, path)


def read_lists(path: str | os.PathLike) -> dict[int, list[int]]:
    """Read ``src,dst,rank`` triples into ranked lists."""
    by_src: dict[int, list[tuple[int, int]]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            try:
                s, d, r = (int(x) for x in rec)
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: expected integer src,dst,rank") from None
            by_src.setdefault(s, []).append((r, d))
    return {s: [d for _, d in sorted(v)] for s, v in by_src.items()}


def load_network(path: str | os.PathLike, n: int | None = None) -> RecNetwork:
    lists = read_lists(path)
    if n is None:
        n = 1 + max([*lists, *(j for v in lists.values() for j in v)], default=-1)
    return from_lists(lists, n)
