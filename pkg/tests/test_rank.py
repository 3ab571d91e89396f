import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_rerank, ppr_dense_oracle
from userrec.bench import random_instance
from userrec.core import AttributeTable, FairnessParams, ShortListWarning
from userrec.network import crawl, from_lists, row_normalize
from userrec.rank import PprParams, PrivateRank, consistency_threshold, descending_order, fair_select, ppr_cpi


def two_cycle():
    return row_normalize(from_lists({0: [1], 1: [0]}, 2))


def test_zero_iterations_is_scaled_indicator():
    s = ppr_cpi(two_cycle(), 0, PprParams(c=0.3, L=0))
    assert s.tolist() == [0.7, 0.0]


def test_small_damping_concentrates_on_source():
    s = ppr_cpi(two_cycle(), 0, PprParams(c=1e-12, L=5))
    assert s[0] == pytest.approx(1.0) and s[1] < 1e-11


def test_two_cycle_closed_form():
    c = 0.4
    s = ppr_cpi(two_cycle(), 0, PprParams(c=c, L=200))
    assert s[0] == pytest.approx((1 - c) / (1 - c * c), abs=1e-12)
    assert s[1] == pytest.approx(c * (1 - c) / (1 - c * c), abs=1e-12)


def test_cpi_matches_dense_solve():
    rng = np.random.default_rng(0)
    n = 60
    lists = {i: rng.choice([j for j in range(n) if j != i], size=5, replace=False).tolist() for i in range(n)}
    net = row_normalize(from_lists(lists, n))
    for c in (0.2, 0.6, 0.85):
        assert np.abs(ppr_cpi(net, 3, PprParams(c, 200)) - ppr_dense_oracle(net, 3, c)).max() <= 1e-10


def test_threshold_values():
    assert consistency_threshold(1) == pytest.approx(0.25)
    assert consistency_threshold(3) == pytest.approx(1 / 64)
    assert consistency_threshold(10) == pytest.approx(1 / (121 * np.log2(11) ** 2))
    assert 6.8e-4 < consistency_threshold(10) < 7.0e-4


def test_params_validation():
    for bad in (dict(c=0.0), dict(c=1.0), dict(L=-1), dict(L=1.5)):
        with pytest.raises(ValueError):
            PprParams(**bad)


def test_descending_order_ties_by_id():
    assert descending_order(np.array([0.5, 1.0, 0.5, 1.0])).tolist() == [1, 3, 0, 2]


def test_consistency_below_threshold():
    K = 5
    rng = np.random.default_rng(1)
    prov, attrs = random_instance(rng, 40, K, 2, 0)
    pr = PrivateRank(prov, attrs, PprParams(c=consistency_threshold(K) * 0.9, L=10))
    for s in range(40):
        assert pr.recommend(s, FairnessParams(K, 0)) == prov.query(s)


def test_half_and_half_at_maximal_tau():
    rng = np.random.default_rng(2)
    prov, attrs = random_instance(rng, 50, 10, 2, 5)
    pr = PrivateRank(prov, attrs)
    for s in range(0, 50, 7):
        out = pr.recommend(s, FairnessParams(10, 5))
        assert np.bincount(attrs.codes[out], minlength=2).tolist() == [5, 5]


def test_matches_brute_force_rerank():
    rng = np.random.default_rng(3)
    prov, attrs = random_instance(rng, 30, 6, 3, 2)
    net = row_normalize(crawl(prov))
    pr = PrivateRank(prov, attrs)
    for s in range(30):
        order = descending_order(ppr_cpi(net, s, pr.ppr))
        expected = brute_rerank(order, attrs.codes, 3, 6, 2, {s})
        assert pr.recommend(s, FairnessParams(6, 2)) == expected


def test_fair_select_short_list_warns():
    attrs = AttributeTable.from_labels(["a", "a", "b"], groups=("a", "b"))
    with pytest.warns(ShortListWarning):
        assert fair_select([0, 1, 2], attrs, FairnessParams(3, 0), exclude={2}) == [0, 1]


def test_history_excluded():
    rng = np.random.default_rng(4)
    prov, attrs = random_instance(rng, 30, 5, 2, 0)
    pr = PrivateRank(prov, attrs)
    first = pr.recommend(0, FairnessParams(5, 0))
    again = pr.recommend(0, FairnessParams(5, 0), history=first[:2])
    assert not set(first[:2]) & set(again) and 0 not in again


@settings(max_examples=40)
@given(seed=st.integers(0, 10_000), n_groups=st.integers(2, 3), data=st.data())
def test_soundness_property(seed, n_groups, data):
    K = 6
    tau = data.draw(st.integers(0, K // n_groups))
    prov, attrs = random_instance(np.random.default_rng(seed), 25, K, n_groups, tau)
    pr = PrivateRank(prov, attrs, PprParams(c=data.draw(st.sampled_from([0.01, 0.5, 0.9]))))
    s = data.draw(st.integers(0, 24))
    with warnings.catch_warnings():
        warnings.simplefilter("error", ShortListWarning)
        out = pr.recommend(s, FairnessParams(K, tau))
    assert len(out) == K and s not in out
    assert np.bincount(attrs.codes[out], minlength=n_groups).min() >= tau
