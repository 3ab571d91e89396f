"""Recovering hidden item coordinates from the unweighted recommendation graph.

Route: crawl the provider, take hop distances on the symmetrized graph, embed
them with classical MDS. Coordinates are identifiable only up to a similarity
transform, so evaluation aligns them with Procrustes first.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.sparse import csgraph

from .network import RecNetwork, crawl


class RecoveryWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DistanceMatrix:
    values: np.ndarray
    disconnected: bool = False


def shortest_paths(net: RecNetwork, symmetrize: bool = True) -> DistanceMatrix:
    """Unit-weight hop distances; unreachable pairs are capped at ``n`` and flagged."""
    adj = (net.adjacency > 0).astype(float)
    if symmetrize:
        adj = adj.maximum(adj.T)
    d = csgraph.shortest_path(adj, method="D", directed=not symmetrize, unweighted=True)
    disconnected = bool(np.isinf(d).any())
    if disconnected:
        warnings.warn("graph is disconnected; distances capped at n", RecoveryWarning)
        d[np.isinf(d)] = net.n
    return DistanceMatrix(d, disconnected)


@dataclass(frozen=True)
class Embedding:
    coords: np.ndarray
    eigenvalues: np.ndarray
    padded: bool = False


def classical_mds(D, d: int) -> Embedding:
    """Torgerson scaling: top-``d`` eigenpairs of ``-1/2 J D^2 J``.

    Each column's largest-magnitude entry is made positive. Missing
    non-negative eigenvalues are replaced by zero columns (``padded``).
    """
    D = np.asarray(D.values if isinstance(D, DistanceMatrix) else D, dtype=float)
    n = len(D)
    if not 1 <= d <= n - 1:
        raise ValueError(f"target dimension must be in 1..{n - 1}")
    j = np.eye(n) - 1.0 / n
    b = -0.5 * j @ (D ** 2) @ j
    b = (b + b.T) / 2
    vals, vecs = np.linalg.eigh(b)
    idx = np.argsort(vals)[::-1][:d]
    vals, vecs = vals[idx], vecs[:, idx]
    padded = bool((vals < 0).any())
    if padded:
        warnings.warn("fewer than d non-negative eigenvalues; padding with zeros", RecoveryWarning)
    vals = np.clip(vals, 0.0, None)
    x = vecs * np.sqrt(vals)
    pivot = np.abs(x).argmax(axis=0)
    signs = np.sign(x[pivot, np.arange(d)])
    signs[signs == 0] = 1.0
    x = x * signs
    x -= x.mean(axis=0)
    return Embedding(x, vals, padded)


@dataclass(frozen=True)
class Alignment:
    aligned: np.ndarray
    rmse: float
    scale: float
    rotation: np.ndarray
    translation: np.ndarray
    degenerate: bool = False


def procrustes_similarity(x: np.ndarray, y: np.ndarray) -> Alignment:
    """Best ``s * x @ R + t`` (R orthogonal, reflections allowed) in Frobenius norm to ``y``.

    RMSE is the root mean squared per-point Euclidean residual.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    mx, my = x.mean(axis=0), y.mean(axis=0)
    xc, yc = x - mx, y - my
    sxx = (xc ** 2).sum()
    degenerate = sxx <= 1e-300
    if degenerate:
        warnings.warn("source configuration has zero variance; scale clamped to 0", RecoveryWarning)
        r = np.eye(x.shape[1])
        s = 0.0
    else:
        u, sig, vt = np.linalg.svd(xc.T @ yc)
        r = u @ vt
        s = sig.sum() / sxx
    t = my - s * mx @ r
    aligned = s * x @ r + t
    rmse = float(np.sqrt(((aligned - y) ** 2).sum(axis=1).mean()))
    return Alignment(aligned, rmse, float(s), r, t, degenerate)


def pairwise_distances(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    sq = ((x[:, None, :] - x[None, :, :]) ** 2).sum(axis=-1)
    return np.sqrt(sq)


@dataclass
class RecoveryDiagnostics:
    network: RecNetwork
    distances: DistanceMatrix
    spearman: float | None = None
    procrustes_rmse: float | None = None
    diameter: float | None = None
    extra: dict = field(default_factory=dict)


def etp_pipeline(oracle, d: int, truth: np.ndarray | None = None, items=None
                 ) -> tuple[Embedding, RecoveryDiagnostics]:
    """Crawl -> symmetrized hop distances -> classical MDS.

    With ``truth`` the diagnostics hold the Spearman correlation of recovered
    and true pairwise distances, the Procrustes RMSE and the true diameter.
    """
    net = crawl(oracle, items)
    dist = shortest_paths(net, symmetrize=True)
    emb = classical_mds(dist, d)
    diag = RecoveryDiagnostics(net, dist)
    if truth is not None:
        truth = np.asarray(truth, dtype=float)
        iu = np.triu_indices(len(truth), k=1)
        true_d = pairwise_distances(truth)
        rec_d = pairwise_distances(emb.coords)
        diag.spearman = float(stats.spearmanr(true_d[iu], rec_d[iu]).statistic)
        diag.procrustes_rmse = procrustes_similarity(emb.coords, truth).rmse
        diag.diameter = float(true_d.max())
    return emb, diag
