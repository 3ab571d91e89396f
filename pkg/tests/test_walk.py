import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bfs_all_pairs
from userrec.bench import counterexample_provider, random_instance
from userrec.core import AttributeTable, FairnessParams, ShortListWarning
from userrec.provider import TableProvider, with_meter
from userrec.walk import WalkParams, consul_recommend, privatewalk_recommend, rank_discount_sample

ONE_GROUP5 = AttributeTable.from_labels(["x"] * 5, groups=("x",))


def test_rank_sample_single_slot():
    rng = np.random.default_rng(0)
    assert {rank_discount_sample(1, rng) for _ in range(100)} == {1}


def test_rank_sample_two_slots_frequency():
    rng = np.random.default_rng(0)
    n = 10**6
    p = 1 / (1 + 1 / np.log2(3))
    hits = sum(rank_discount_sample(2, rng) == 1 for _ in range(n))
    sigma = np.sqrt(n * p * (1 - p))
    assert abs(hits - n * p) <= 3 * sigma
    assert p == pytest.approx(0.6131, abs=1e-4)


def test_rank_sample_seeded():
    a = [rank_discount_sample(7, np.random.default_rng(5)) for _ in range(3)]
    b = [rank_discount_sample(7, np.random.default_rng(5)) for _ in range(3)]
    assert a == b


def test_privatewalk_can_reorder_the_provider():
    prov, source = counterexample_provider()
    assert prov.query(source) == [1, 3]
    outs = {tuple(privatewalk_recommend(prov, source, ONE_GROUP5, FairnessParams(2, 0), WalkParams(seed=s)))
            for s in range(200)}
    assert (1, 0) in outs


def test_privatewalk_balances_at_maximal_tau():
    prov, attrs = random_instance(np.random.default_rng(1), 60, 10, 2, 5)
    for s in range(5):
        out = privatewalk_recommend(prov, s, attrs, FairnessParams(10, 5), WalkParams(seed=s))
        assert np.bincount(attrs.codes[out], minlength=2).tolist() == [5, 5]


def test_privatewalk_items_reachable_or_fallback():
    prov, attrs = random_instance(np.random.default_rng(2), 30, 3, 2, 2)
    lists = {i: prov.query(i) for i in range(30)}
    dist = bfs_all_pairs(lists, 30)  # follows list edges in their direction
    for s in range(30):
        trace = []
        out = privatewalk_recommend(prov, s, attrs, FairnessParams(3, 1), WalkParams(L_max=4, seed=s),
                                    fallback_trace=trace)
        for j in out:
            assert dist[s, j] <= 4 or j in trace


def test_privatewalk_deterministic():
    prov, attrs = random_instance(np.random.default_rng(3), 40, 5, 2, 2)
    runs = [privatewalk_recommend(prov, 7, attrs, FairnessParams(5, 2), WalkParams(seed=11)) for _ in range(2)]
    assert runs[0] == runs[1]


def test_consul_without_constraint_is_the_provider():
    prov, attrs = random_instance(np.random.default_rng(4), 40, 6, 2, 0)
    for s in range(40):
        oracle, meter = with_meter(prov)
        assert consul_recommend(oracle, s, attrs, FairnessParams(6, 0)) == prov.query(s)
        assert meter.distinct == 1


def test_consul_access_bound_and_balance():
    prov, attrs = random_instance(np.random.default_rng(5), 50, 10, 2, 5)
    for s in range(20):
        oracle, meter = with_meter(prov)
        out = consul_recommend(oracle, s, attrs, FairnessParams(10, 5), WalkParams(L_max=10, seed=s))
        assert meter.distinct <= 10
        assert np.bincount(attrs.codes[out], minlength=2).tolist() == [5, 5]
        consul_acc = meter.distinct
        accs = []
        for seed in range(100):
            o2, m2 = with_meter(prov)
            privatewalk_recommend(o2, s, attrs, FairnessParams(10, 5), WalkParams(seed=seed))
            accs.append(m2.distinct)
        assert consul_acc <= np.mean(accs)


def test_consul_dfs_order():
    # rank 1 is explored first, so the pages opened are 0, 1 then 3
    prov = TableProvider({0: [1, 2], 1: [3, 4], 2: [0, 1], 3: [5, 0], 4: [0, 1], 5: [0, 1]}, n_items=6)
    attrs = AttributeTable.from_labels(["a", "a", "a", "a", "a", "b"], groups=("a", "b"))
    oracle, meter = with_meter(prov)
    out = consul_recommend(oracle, 0, attrs, FairnessParams(2, 1), WalkParams(L_max=5))
    assert out == [1, 5]
    assert oracle.visited == {0, 1, 3}


def test_consul_deterministic():
    prov, attrs = random_instance(np.random.default_rng(6), 40, 5, 3, 1)
    runs = [consul_recommend(prov, 2, attrs, FairnessParams(5, 1), WalkParams(L_max=3, seed=9)) for _ in range(2)]
    assert runs[0] == runs[1]


def test_fallback_when_no_admissible_item_exists():
    attrs = AttributeTable.from_labels(["a", "a", "a"], groups=("a",))
    prov = TableProvider({0: [1, 2], 1: [0, 2], 2: [0, 1]}, n_items=3)
    with pytest.warns(ShortListWarning):
        out = consul_recommend(prov, 0, attrs, FairnessParams(3, 0))
    assert sorted(out) == [1, 2]


@settings(max_examples=40)
@given(seed=st.integers(0, 10_000), data=st.data())
def test_local_methods_sound(seed, data):
    K, n_groups = 6, data.draw(st.integers(2, 3))
    tau = data.draw(st.integers(0, K // n_groups))
    prov, attrs = random_instance(np.random.default_rng(seed), 25, K, n_groups, tau)
    method = data.draw(st.sampled_from([privatewalk_recommend, consul_recommend]))
    s = data.draw(st.integers(0, 24))
    with warnings.catch_warnings():
        warnings.simplefilter("error", ShortListWarning)
        out = method(prov, s, attrs, FairnessParams(K, tau), WalkParams(L_max=5, seed=seed))
    assert len(out) == K == len(set(out)) and s not in out
    assert np.bincount(attrs.codes[out], minlength=n_groups).min() >= tau
