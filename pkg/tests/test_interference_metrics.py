import math
import statistics

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from meshca.conflict_graph import build_emmcg, total_interference_degree
from meshca.interference_metrics import (MetricError, all_metrics, cdal_cost, channel_loads,
                                         cxls_wt, enumerate_x_link_sets, format_metrics_csv)
from meshca.topology import make_topology

from . import oracles


def _lcm_from_counts(counts):
    lcm, i = {}, 0
    for ch, n in enumerate(counts):
        for _ in range(n):
            lcm[i] = ch
            i += 1
    return lcm


def test_cdal_even_load_is_zero():
    assert cdal_cost(_lcm_from_counts([5, 5, 5, 5]), 4) == 0.0


def test_cdal_known_value():
    counts = [8, 6, 4, 2]
    assert cdal_cost(_lcm_from_counts(counts), 4) == pytest.approx(math.sqrt(5))
    assert cdal_cost(_lcm_from_counts(counts), 4) == pytest.approx(statistics.pstdev(counts))


def test_cdal_skewed_worse_than_even():
    assert cdal_cost(_lcm_from_counts([20, 0, 0, 0]), 4) > cdal_cost(_lcm_from_counts([5] * 4), 4)


def test_cdal_counts_unused_channels():
    # one link on channel 0 out of 4: loads [1, 0, 0, 0]
    assert cdal_cost({7: 0}, 4) == pytest.approx(statistics.pstdev([1, 0, 0, 0]))


def test_cdal_errors():
    with pytest.raises(MetricError):
        cdal_cost({}, 4)
    with pytest.raises(MetricError):
        channel_loads({0: 4}, 4)


@settings(max_examples=200, deadline=None)
@given(counts=st.lists(st.integers(0, 20), min_size=2, max_size=6), data=st.data())
def test_cdal_moving_load_to_heavier_channel_increases(counts, data):
    if sum(counts) == 0:
        counts[0] = 1
    src = data.draw(st.sampled_from([i for i, c in enumerate(counts) if c > 0]))
    dst = data.draw(st.sampled_from([i for i, c in enumerate(counts) if i != src and c >= counts[src]]
                                    or [None]))
    if dst is None:
        return
    moved = list(counts)
    moved[src] -= 1
    moved[dst] += 1
    C = len(counts)
    assert cdal_cost(_lcm_from_counts(moved), C) > cdal_cost(_lcm_from_counts(counts), C)
    assert cdal_cost(_lcm_from_counts(counts), C) == pytest.approx(statistics.pstdev(counts))


def test_enumeration_small_cases(path3, triangle):
    assert enumerate_x_link_sets(path3, {0: 0, 1: 0}, 2) == [(0, 1)]
    assert enumerate_x_link_sets(triangle, {0: 0, 1: 0, 2: 0}, 2) == [(0, 1), (0, 2), (1, 2)]
    assert enumerate_x_link_sets(triangle, {0: 0, 1: 0, 2: 0}, 3) == [(0, 1, 2)]
    assert enumerate_x_link_sets(triangle, {0: 0, 1: 0, 2: 0}, 1) == [(0,), (1,), (2,)]
    assert enumerate_x_link_sets(triangle, {0: 0, 1: 0, 2: 0}, 4) == []


def test_enumeration_skips_dead_links(path3):
    assert enumerate_x_link_sets(path3, {0: 0}, 2) == []


def test_enumeration_disjoint_links_not_connected():
    topo = make_topology([(0, 0), (200, 0), (300, 0), (500, 0)], [(0, 1), (2, 3)])
    assert enumerate_x_link_sets(topo, {0: 0, 1: 0}, 2) == []


def test_enumeration_bad_x(path3):
    with pytest.raises(MetricError):
        enumerate_x_link_sets(path3, {0: 0, 1: 0}, 0)


def test_enumeration_matches_brute_force():
    rng = np.random.default_rng(2)
    for _ in range(150):
        topo = oracles.random_small_topology(rng, max_links=12, n_nodes=int(rng.integers(3, 8)))
        lcm = oracles.random_lcm(rng, topo, density=0.85)
        for x in (1, 2, 3, 4):
            got = enumerate_x_link_sets(topo, lcm, x)
            assert got == oracles.x_link_sets(topo, lcm, x)
            assert len(set(got)) == len(got)


def test_cxls_path(path3):
    cg = build_emmcg(path3, 2)
    assert cxls_wt(path3, {0: 1, 1: 1}, cg) == 1
    assert cxls_wt(path3, {0: 1, 1: 2}, cg) == 0


def test_cxls_single_channel_triangle(triangle):
    cg = build_emmcg(triangle, 2)
    assert cxls_wt(triangle, {0: 0, 1: 0, 2: 0}, cg) == 3


def test_cxls_x_mismatch(path3):
    with pytest.raises(MetricError, match="does not match"):
        cxls_wt(path3, {0: 0, 1: 0}, build_emmcg(path3, 2), x=3)


def test_cxls_two_links_equals_adjacent_tid(path3):
    cg = build_emmcg(path3, 2)
    for lcm in ({0: 0, 1: 0}, {0: 0, 1: 3}):
        assert cxls_wt(path3, lcm, cg) == total_interference_degree(cg, lcm)


@pytest.mark.parametrize("ratio", [1, 2, 3])
def test_cxls_matches_brute_force(ratio):
    rng = np.random.default_rng(30 + ratio)
    for _ in range(100):
        topo = oracles.random_small_topology(rng, max_links=12)
        cg = build_emmcg(topo, ratio)
        lcm = oracles.random_lcm(rng, topo, channels=int(rng.integers(1, 4)))
        pairs = oracles.conflict_pairs(topo, ratio)
        assert cxls_wt(topo, lcm, cg) == oracles.cxls(topo, lcm, pairs, ratio)


def test_cxls_relabel_invariant():
    rng = np.random.default_rng(9)
    for _ in range(50):
        topo = oracles.random_small_topology(rng, max_links=12)
        cg = build_emmcg(topo, 2)
        lcm = oracles.random_lcm(rng, topo)
        perm = rng.permutation(4)
        assert cxls_wt(topo, {l: int(perm[c]) for l, c in lcm.items()}, cg) == cxls_wt(topo, lcm, cg)


def test_all_metrics_and_csv(path3):
    cg = build_emmcg(path3, 2)
    m = all_metrics(path3, {0: 0, 1: 0}, cg, 4)
    assert m["TID"] == 1 and m["CXLS"] == 1
    assert m["CDAL"] == pytest.approx(statistics.pstdev([2, 0, 0, 0]))
    text = format_metrics_csv({"X": m})
    assert text.splitlines() == ["scheme,TID,CDAL,CXLS", f"X,1,{m['CDAL']:.6f},1"]
