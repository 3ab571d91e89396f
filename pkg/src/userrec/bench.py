"""Synthetic instances: the biased-provider benchmark, random soundness instances, and the
5-item counterexample on which PrivateWalk disagrees with the provider."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import AttributeTable
from .provider import Provider, ScoreProvider, TableProvider

PROTECTED, MAJORITY = "protected", "majority"


@dataclass(frozen=True)
class Task:
    source: int
    history: frozenset = frozenset()
    positive: int | None = None


@dataclass
class Dataset:
    """A provider plus what is needed to score recommendations on it.

    ``labels`` enables same-label precision; tasks with ``positive`` enable
    recall/nDCG.
    """

    name: str
    provider: Provider
    attrs: AttributeTable
    tasks: list
    labels: np.ndarray | None = None
    coords: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_items(self) -> int:
        return self.provider.n_items


# score functions are classes rather than closures so providers pickle into worker processes
@dataclass(frozen=True)
class _PenalizedDistance:
    coords: np.ndarray
    penalty: np.ndarray

    def __call__(self, i):
        return -np.sqrt(((self.coords - self.coords[i]) ** 2).sum(axis=1)) - self.penalty


@dataclass(frozen=True)
class _Dot:
    emb: np.ndarray

    def __call__(self, i):
        return self.emb @ self.emb[i]


def biased_benchmark(n: int = 1000, K: int = 10, seed: int = 0, n_clusters: int = 8,
                     protected_share: float = 0.5, bias: float = 0.5, n_tasks: int = 100,
                     spread: float = 1.0) -> Dataset:
    """Clustered 2-D items; the provider ranks by distance but penalizes protected items.

    Labels are cluster ids, groups are independent of position, so an unbiased
    neighbour list would be roughly balanced while the provider's is not.
    """
    rng = np.random.default_rng(seed)
    centers = rng.uniform(0, 10 * spread, size=(n_clusters, 2))
    labels = rng.integers(n_clusters, size=n)
    coords = centers[labels] + rng.normal(scale=spread, size=(n, 2))
    protected = rng.random(n) < protected_share
    attrs = AttributeTable.from_labels([PROTECTED if p else MAJORITY for p in protected], groups=(PROTECTED, MAJORITY))
    provider = ScoreProvider(_PenalizedDistance(coords, bias * protected.astype(float)), n, K)
    sources = np.sort(rng.choice(n, size=min(n_tasks, n), replace=False))
    tasks = [Task(int(s)) for s in sources]
    return Dataset(f"biased-n{n}-s{seed}", provider, attrs, tasks, labels=labels, coords=coords)


def random_instance(rng: np.random.Generator, n: int, K: int, n_groups: int, tau: int,
                    dim: int = 2) -> tuple[ScoreProvider, AttributeTable]:
    """Random dot-product provider over ``n`` items with at least ``tau`` items per group."""
    while True:
        codes = rng.integers(n_groups, size=n)
        if np.bincount(codes, minlength=n_groups).min() >= tau:
            break
    emb = rng.normal(size=(n, dim))
    # skew scores toward one group so provider lists are often unfair
    emb[:, 0] += 2.0 * (codes == 0)
    provider = ScoreProvider(_Dot(emb), n, K)
    attrs = AttributeTable(codes, tuple(f"g{g}" for g in range(n_groups)))
    return provider, attrs


def counterexample_provider() -> tuple[TableProvider, int]:
    """Items 1..5 (dense ids 0..4), K=2, with lists (((i+3) mod 5)+1, (i mod 5)+1).

    Returns the provider and the dense id of item 3, whose provider list is (2, 4).
    """
    lists = {}
    for i in range(1, 6):
        lists[i - 1] = [((i + 3) % 5) + 1 - 1, (i % 5) + 1 - 1]
    return TableProvider(lists, n_items=5, K=2), 2
