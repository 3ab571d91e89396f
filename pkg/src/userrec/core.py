"""Shared vocabulary: item groups, fairness parameters, group ledgers and list metrics."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Sequence

import numpy as np

# One log base for entropy, edge weights, DCG and the consistency threshold.
LOG_BASE = 2.0


def rank_discount(rank: int) -> float:
    """Weight ``1 / log2(rank + 1)`` of a 1-based rank position."""
    return 1.0 / math.log(rank + 1, LOG_BASE)


class FairnessConstraintError(ValueError):
    """Raised when ``tau`` cannot be met by any list (too large, or too few items in a group)."""


class ShortListWarning(UserWarning):
    """Emitted when a recommender returns fewer than K items."""


@dataclass(frozen=True)
class AttributeTable:
    """Total mapping from dense item id to a sensitive group.

    ``codes[i]`` is the index into ``groups`` of item ``i``'s label.
    """

    codes: np.ndarray
    groups: tuple

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64)
        if codes.ndim != 1:
            raise ValueError("codes must be one-dimensional")
        if not self.groups:
            raise ValueError("group set must be nonempty")
        if len(set(self.groups)) != len(self.groups):
            raise ValueError("group labels must be distinct")
        if codes.size and (codes.min() < 0 or codes.max() >= len(self.groups)):
            raise ValueError("group code out of range")
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "groups", tuple(self.groups))

    @classmethod
    def from_labels(cls, labels: Sequence[Hashable], groups: Iterable[Hashable] | None = None) -> "AttributeTable":
        """Build from per-item labels. ``groups`` fixes the label order and may add absent groups."""
        if groups is None:
            groups = sorted(set(labels), key=str)
        groups = tuple(groups)
        index = {g: k for k, g in enumerate(groups)}
        try:
            codes = np.array([index[label] for label in labels], dtype=np.int64)
        except KeyError as exc:
            raise ValueError(f"label {exc.args[0]!r} not in group set") from None
        return cls(codes, groups)

    @property
    def n_items(self) -> int:
        return int(self.codes.size)

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    def group_of(self, item: int) -> int:
        return int(self.codes[item])

    def label_of(self, item: int):
        return self.groups[self.codes[item]]

    def group_sizes(self, universe: Iterable[int] | None = None) -> np.ndarray:
        codes = self.codes if universe is None else self.codes[np.asarray(list(universe), dtype=np.int64)]
        return np.bincount(codes, minlength=self.n_groups)


@dataclass(frozen=True)
class FairnessParams:
    """List length ``K`` and per-group minimum ``tau``."""

    K: int
    tau: int = 0

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K!r}")
        if int(self.tau) != self.tau or self.tau < 0:
            raise FairnessConstraintError(f"tau must be a non-negative integer, got {self.tau!r}")

    @classmethod
    def for_attributes(cls, K: int, tau: int, attrs: AttributeTable,
                       universe: Iterable[int] | None = None) -> "FairnessParams":
        params = cls(K, tau)
        params.validate(attrs, universe)
        return params

    def validate(self, attrs: AttributeTable, universe: Iterable[int] | None = None) -> None:
        """Check ``tau * |groups| <= K`` and that every group has at least ``tau`` items."""
        if self.tau * attrs.n_groups > self.K:
            raise FairnessConstraintError(
                f"tau={self.tau} exceeds K/|groups| = {self.K}/{attrs.n_groups}"
            )
        sizes = attrs.group_sizes(universe)
        short = [attrs.groups[g] for g in range(attrs.n_groups) if sizes[g] < self.tau]
        if short:
            raise FairnessConstraintError(
                f"groups {short} have fewer than tau={self.tau} items in the universe"
            )


@dataclass
class GroupLedger:
    """Per-group counts of the items in a list under construction."""

    counts: list = field(default_factory=list)

    @classmethod
    def empty(cls, n_groups: int) -> "GroupLedger":
        return cls([0] * n_groups)

    @classmethod
    def of(cls, items: Iterable[int], attrs: AttributeTable) -> "GroupLedger":
        ledger = cls.empty(attrs.n_groups)
        for i in items:
            ledger.add(attrs.group_of(i))
        return ledger

    def add(self, group: int) -> None:
        self.counts[group] += 1

    @property
    def total(self) -> int:
        return sum(self.counts)


def deficit(ledger: GroupLedger, tau: int, exclude: int | None = None) -> int:
    """Sum over groups (optionally skipping ``exclude``) of ``max(0, tau - count)``."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    return sum(max(0, tau - c) for g, c in enumerate(ledger.counts) if g != exclude)


def can_add(ledger: GroupLedger, list_len: int, candidate_group: int, params: FairnessParams) -> bool:
    """Whether an item of ``candidate_group`` can be appended without making ``tau`` unreachable.

    The remaining ``K - list_len - 1`` slots must cover the deficit of every
    other group.
    """
    if list_len >= params.K:
        raise ValueError(f"list is full (length {list_len}, K={params.K})")
    return deficit(ledger, params.tau, exclude=candidate_group) <= params.K - list_len - 1


def _group_counts(items: Sequence[int], attrs: AttributeTable) -> np.ndarray:
    if len(items) == 0:
        raise ValueError("metric undefined for an empty list")
    return np.bincount(attrs.codes[np.asarray(items, dtype=np.int64)], minlength=attrs.n_groups)


def least_ratio(items: Sequence[int], attrs: AttributeTable) -> Fraction:
    """Smallest fraction of any group in the list (absent groups count as zero), exact."""
    counts = _group_counts(items, attrs)
    return Fraction(int(counts.min()), len(items))


def list_entropy(items: Sequence[int], attrs: AttributeTable) -> float:
    """Base-2 Shannon entropy of the group proportions in the list."""
    counts = _group_counts(items, attrs)
    p = counts[counts > 0] / len(items)
    return float(-(p * np.log2(p)).sum())


def group_histogram(items: Iterable[int], attrs: AttributeTable) -> Counter:
    return Counter(attrs.label_of(i) for i in items)
