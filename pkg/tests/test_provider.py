import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_top_k
from userrec.core import ShortListWarning
from userrec.network import crawl
from userrec.provider import (OracleError, TableProvider, cosine_provider, dot_provider, knn_provider, standardize,
                              with_meter)


def test_knn_one_dimensional():
    prov = knn_provider(np.array([[0.0], [1.0], [2.0], [10.0]]), K=2)
    assert prov.query(0) == [1, 2]
    assert prov.query(3) == [2, 1]


def test_knn_matches_all_pairs_sort():
    x = np.random.default_rng(1).normal(size=(30, 2))
    z = standardize(x)
    dist = np.sqrt(((z[:, None] - z[None]) ** 2).sum(-1))
    prov = knn_provider(x, K=5)
    for i in range(30):
        assert prov.query(i) == brute_top_k(-dist, i, 5)


def test_standardize_drops_constant_columns():
    x = np.c_[np.arange(5.0), np.ones(5)]
    z = standardize(x)
    assert z.shape == (5, 1)
    assert z.mean() == pytest.approx(0) and z.std() == pytest.approx(1)


def test_cosine_identical_and_orthogonal_columns():
    m = np.array([[1, 1, 0, 1], [1, 1, 0, 0], [0, 0, 1, 0]], dtype=float)
    prov = cosine_provider(m, K=2)
    assert prov.query(0)[0] == 1 and prov.scores(0)[1] == pytest.approx(1.0)
    # item 2 is orthogonal to 0 and ranks after the positive pair (0, 3)
    assert prov.query(0) == [1, 3]


def test_cosine_zero_columns_rank_last():
    m = np.array([[1, 0, 0, 1], [0, 0, 1, 1]], dtype=float)
    prov = cosine_provider(m, K=3)
    assert prov.query(0)[-1] == 1


def test_cosine_matches_dense_oracle():
    m = (np.random.default_rng(2).random((15, 20)) < 0.3).astype(float)
    norms = np.linalg.norm(m, axis=0)
    sim = np.zeros((20, 20))
    for i in range(20):
        for j in range(20):
            sim[i, j] = m[:, i] @ m[:, j] / (norms[i] * norms[j]) if norms[i] and norms[j] else 0.0
            if norms[j] == 0:
                sim[i, j] = -np.inf
    prov = cosine_provider(m, K=4)
    for i in range(20):
        assert prov.query(i) == brute_top_k(sim, i, 4)


def test_dot_example_order():
    emb = np.array([[1.0, 0.0], [2.0, 0.0], [0.0, 3.0], [-1.0, 0.0]])
    assert dot_provider(emb, K=3).query(0) == [1, 2, 3]


def test_dot_all_zero_ties_by_id():
    assert dot_provider(np.zeros((6, 2)), K=3).query(4) == [0, 1, 2]


def test_dot_matches_brute_force():
    e = np.random.default_rng(3).normal(size=(50, 4))
    prov = dot_provider(e, K=10)
    s = e @ e.T
    for i in range(50):
        assert prov.query(i) == brute_top_k(s, i, 10)


def test_history_exclusion_refills_from_deeper_ranks():
    e = np.random.default_rng(4).normal(size=(40, 3))
    base = dot_provider(e, K=5)
    hist = set(base.query(0)[:3])
    prov = base.with_history(hist)
    assert prov.query(0) == brute_top_k(e @ e.T, 0, 5, exclude=hist)
    assert base.history == frozenset()


@given(seed=st.integers(0, 500), source=st.integers(0, 24))
def test_exclusion_invariant(seed, source):
    rng = np.random.default_rng(seed)
    hist = set(rng.choice(25, size=5, replace=False).tolist())
    prov = knn_provider(rng.normal(size=(25, 2)), K=6).with_history(hist)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ShortListWarning)
        lst = prov.query(source)
    assert source not in lst and not hist & set(lst) and len(set(lst)) == len(lst)


def test_short_list_is_flagged():
    prov = knn_provider(np.arange(4.0)[:, None], K=3).with_history({1})
    with pytest.warns(ShortListWarning):
        assert prov.query(0) == [2, 3]


def test_too_few_items():
    with pytest.raises(ValueError):
        knn_provider(np.zeros((3, 1)), K=3)


def test_table_provider_unknown_item():
    with pytest.raises(OracleError):
        TableProvider({0: [1]}, n_items=3).query(2)


def test_meter_distinct_sources():
    oracle, meter = with_meter(dot_provider(np.eye(5), K=2))
    for i in range(3):
        oracle.query(i)
    assert (meter.total, meter.distinct) == (3, 3)


def test_meter_memoizes_repeated_queries():
    calls = []

    class Counting(TableProvider):
        def _ranked(self, source):
            calls.append(source)
            return super()._ranked(source)

    oracle, meter = with_meter(Counting({0: [1, 2]}, n_items=3))
    for _ in range(3):
        assert oracle.query(0) == [1, 2]
    assert (meter.total, meter.distinct, len(calls)) == (3, 1, 1)


def test_full_crawl_touches_every_item():
    oracle, meter = with_meter(dot_provider(np.random.default_rng(0).normal(size=(100, 3)), K=5))
    net = crawl(oracle)
    assert meter.distinct == 100 == meter.total
    assert net.n_edges == 500
