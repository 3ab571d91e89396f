"""Loading interaction logs, attributes and vector tables; k-core filtering; leave-one-out splits.

File formats (UTF-8, comma separated):

* interactions: ``user,item[,timestamp]``; an optional header row starting with ``user``.
* attributes: ``item,label`` with header.
* features / embeddings: ``item,v0,v1,...`` with header.
* remap tables: ``dense,original`` with header.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import AttributeTable


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class InteractionLog:
    """Deduplicated implicit-feedback log with dense ids.

    ``user_labels[u]`` / ``item_labels[i]`` give the original id of dense user
    ``u`` / item ``i`` (the remap tables). ``timestamps`` is ``None`` for
    timestamp-free logs. Row order is preserved from the source file.
    """

    users: np.ndarray
    items: np.ndarray
    timestamps: np.ndarray | None
    user_labels: np.ndarray
    item_labels: np.ndarray

    @property
    def n_users(self) -> int:
        return len(self.user_labels)

    @property
    def n_items(self) -> int:
        return len(self.item_labels)

    @property
    def n_interactions(self) -> int:
        return len(self.users)

    @property
    def empty(self) -> bool:
        return self.n_interactions == 0

    def triples(self) -> list[tuple]:
        ts = self.timestamps if self.timestamps is not None else [None] * len(self.users)
        return [(int(u), int(i), None if t is None else int(t)) for u, i, t in zip(self.users, self.items, ts)]

    def item_degrees(self) -> np.ndarray:
        return np.bincount(self.items, minlength=self.n_items)

    def user_degrees(self) -> np.ndarray:
        return np.bincount(self.users, minlength=self.n_users)

    def matrix(self) -> np.ndarray:
        """Dense binary user x item matrix."""
        m = np.zeros((self.n_users, self.n_items))
        m[self.users, self.items] = 1.0
        return m


def _sort_key(label: str):
    # numeric ids sort numerically, everything else lexicographically after them
    try:
        return (0, int(label), "")
    except ValueError:
        return (1, 0, label)


def _densify(labels: list[str]) -> tuple[np.ndarray, np.ndarray]:
    uniq = sorted(set(labels), key=_sort_key)
    index = {lab: k for k, lab in enumerate(uniq)}
    return np.array([index[lab] for lab in labels], dtype=np.int64), np.array(uniq, dtype=object)


def from_triples(rows, *, dedup: bool = True) -> InteractionLog:
    """Build a log from ``(user, item[, timestamp])`` tuples of original ids."""
    users, items, stamps = [], [], []
    seen = set()
    has_ts = None
    for row in rows:
        u, i = str(row[0]), str(row[1])
        t = row[2] if len(row) > 2 else None
        if has_ts is None:
            has_ts = t is not None
        elif has_ts != (t is not None):
            raise DataError("timestamps must be given for all rows or none")
        if dedup:
            if (u, i) in seen:
                continue
            seen.add((u, i))
        users.append(u)
        items.append(i)
        stamps.append(t)
    if not users:
        raise DataError("no interactions")
    du, ul = _densify(users)
    di, il = _densify(items)
    ts = np.array(stamps, dtype=np.int64) if has_ts else None
    return InteractionLog(du, di, ts, ul, il)


def load_interactions(path: str | os.PathLike) -> InteractionLog:
    """Parse an interactions CSV, deduplicating ``(user, item)`` pairs (first row wins)."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if not rec or all(not f.strip() for f in rec):
                continue
            if lineno == 1 and rec[0].strip().lower() == "user":
                continue
            if len(rec) not in (2, 3):
                raise DataError(f"{path}: line {lineno}: expected user,item[,timestamp], got {len(rec)} fields")
            try:
                u, i = int(rec[0]), int(rec[1])
                t = int(rec[2]) if len(rec) == 3 and rec[2].strip() != "" else None
            except ValueError:
                raise DataError(f"{path}: line {lineno}: non-integer field in {rec!r}") from None
            rows.append((u, i) if t is None else (u, i, t))
    if not rows:
        raise DataError(f"{path}: empty interaction file")
    return from_triples(rows)


def _subset(log: InteractionLog, keep: np.ndarray) -> InteractionLog:
    users, items = log.users[keep], log.items[keep]
    ukeep = np.unique(users)
    ikeep = np.unique(items)
    umap = np.full(log.n_users, -1, dtype=np.int64)
    umap[ukeep] = np.arange(len(ukeep))
    imap = np.full(log.n_items, -1, dtype=np.int64)
    imap[ikeep] = np.arange(len(ikeep))
    ts = None if log.timestamps is None else log.timestamps[keep]
    return InteractionLog(umap[users], imap[items], ts, log.user_labels[ukeep], log.item_labels[ikeep])


def k_core(log: InteractionLog, k: int) -> InteractionLog:
    """Iteratively drop users and items with fewer than ``k`` interactions until stable.

    The result may be empty (check ``.empty``); ids are re-densified and the
    label arrays compose with the input's.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    keep = np.ones(log.n_interactions, dtype=bool)
    while True:
        udeg = np.bincount(log.users[keep], minlength=log.n_users)
        ideg = np.bincount(log.items[keep], minlength=log.n_items)
        ok = keep & (udeg[log.users] >= k) & (ideg[log.items] >= k)
        if ok.sum() == keep.sum():
            break
        keep = ok
    return _subset(log, keep)


@dataclass(frozen=True)
class LeaveOneOutSplit:
    """Per-user evaluation task: recommend for ``source``; ``positive`` is held out.

    ``history[u]`` holds every item of user ``u`` except the positive.
    """

    users: np.ndarray
    sources: np.ndarray
    positives: np.ndarray
    history: dict = field(repr=False)

    def __len__(self):
        return len(self.users)


def leave_one_out(log: InteractionLog, seed: int = 0) -> LeaveOneOutSplit:
    """Hold out each user's latest interaction; the second latest is the source.

    Order is (timestamp, file row). Without timestamps the rows are first put in
    a seeded random order.
    """
    n = log.n_interactions
    if log.timestamps is None:
        order = np.random.default_rng(seed).permutation(n)
    else:
        order = np.lexsort((np.arange(n), log.timestamps))
    per_user: dict[int, list[int]] = {}
    for row in order:
        per_user.setdefault(int(log.users[row]), []).append(int(log.items[row]))
    bad = sorted(u for u, seq in per_user.items() if len(seq) < 2)
    bad += [u for u in range(log.n_users) if u not in per_user]
    if bad:
        raise DataError(f"users with fewer than 2 interactions: {sorted(bad)[:20]}")
    users = np.arange(log.n_users)
    sources = np.array([per_user[u][-2] for u in users], dtype=np.int64)
    positives = np.array([per_user[u][-1] for u in users], dtype=np.int64)
    history = {int(u): frozenset(per_user[u][:-1]) for u in users}
    return LeaveOneOutSplit(users, sources, positives, history)


PROTECTED, UNPROTECTED = "protected", "unprotected"


def popularity_attributes(log: InteractionLog, threshold: int = 50) -> AttributeTable:
    """Label items with fewer than ``threshold`` interactions as protected."""
    deg = log.item_degrees()
    labels = [PROTECTED if d < threshold else UNPROTECTED for d in deg]
    return AttributeTable.from_labels(labels, groups=(PROTECTED, UNPROTECTED))


def load_attributes(path: str | os.PathLike, item_labels: np.ndarray | None = None) -> AttributeTable:
    """Read an ``item,label`` CSV.

    With ``item_labels`` (a log's item remap) the file is keyed by original ids
    and every item of the log must be labelled; otherwise items must be the
    dense ids ``0..n-1``.
    """
    mapping: dict[str, str] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty attribute file")
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 2:
                raise DataError(f"{path}: line {lineno}: expected item,label")
            mapping[rec[0].strip()] = rec[1].strip()
    keys = [str(x) for x in item_labels] if item_labels is not None else [str(i) for i in range(len(mapping))]
    missing = [k for k in keys if k not in mapping]
    if missing:
        raise DataError(f"{path}: no label for items {missing[:20]}")
    return AttributeTable.from_labels([mapping[k] for k in keys])


def load_vectors(path: str | os.PathLike) -> np.ndarray:
    """Read a features/embeddings CSV into an ``(n, d)`` array indexed by dense item id."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty vector file")
        d = len(header) - 1
        rows: dict[int, list[float]] = {}
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != d + 1:
                raise DataError(f"{path}: line {lineno}: expected {d + 1} fields")
            try:
                rows[int(rec[0])] = [float(v) for v in rec[1:]]
            except ValueError:
                raise DataError(f"{path}: line {lineno}: unparsable value") from None
    if sorted(rows) != list(range(len(rows))):
        raise DataError(f"{path}: item ids must be exactly 0..n-1")
    x = np.array([rows[i] for i in range(len(rows))], dtype=float).reshape(len(rows), d)
    if not np.isfinite(x).all():
        raise DataError(f"{path}: non-finite values")
    return x


def _atomic_write(path: Path, write) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        write(fh)
    os.replace(tmp, path)


def write_vectors(path, x: np.ndarray) -> None:
    x = np.atleast_2d(np.asarray(x, dtype=float))

    def w(fh):
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["item"] + [f"v{k}" for k in range(x.shape[1])])
        for i, row in enumerate(x):
            out.writerow([i] + [repr(float(v)) for v in row])

    _atomic_write(path, w)


def write_attributes(path, attrs: AttributeTable) -> None:
    def w(fh):
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["item", "label"])
        for i in range(attrs.n_items):
            out.writerow([i, attrs.label_of(i)])

    _atomic_write(path, w)


def write_interactions(path, log: InteractionLog) -> None:
    def w(fh):
        out = csv.writer(fh, lineterminator="\n")
        if log.timestamps is None:
            out.writerow(["user", "item"])
            out.writerows(zip(log.users.tolist(), log.items.tolist()))
        else:
            out.writerow(["user", "item", "timestamp"])
            out.writerows(zip(log.users.tolist(), log.items.tolist(), log.timestamps.tolist()))

    _atomic_write(path, w)


def write_remap(path, labels: np.ndarray) -> None:
    def w(fh):
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["dense", "original"])
        out.writerows(enumerate(labels.tolist()))

    _atomic_write(path, w)


def write_split(path, split: LeaveOneOutSplit) -> None:
    def w(fh):
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["user", "source", "positive", "history"])
        for u, s, p in zip(split.users.tolist(), split.sources.tolist(), split.positives.tolist()):
            out.writerow([u, s, p, " ".join(map(str, sorted(split.history[u])))])

    _atomic_write(path, w)
