import numpy as np
import pytest

from meshca.channel_assignment import live_link_channels, run_ca_scheme
from meshca.conflict_graph import (COLOCATION, RANGE, ConflictGraphError, build_emmcg,
                                   interference_degree, total_interference_degree)
from meshca.topology import make_topology

from . import oracles


def test_far_apart_links_do_not_conflict():
    topo = make_topology([(0, 0), (200, 0), (2000, 0), (2200, 0)], [(0, 1), (2, 3)])
    cg = build_emmcg(topo, 2)
    assert cg.n_edges == 0


def test_star_colocation_edges(star3):
    # each spoke on a distinct hub radio
    binding = {0: (0, 0), 1: (1, 0), 2: (2, 0)}
    cg = build_emmcg(star3, 2, binding)
    assert cg.edges() == [(0, 1), (0, 2), (1, 2)]
    for a, b in cg.edges():
        assert cg.edge_kind(a, b) == {RANGE, COLOCATION}


def test_star_without_binding_has_range_edges_only(star3):
    cg = build_emmcg(star3, 2)
    assert all(k == {RANGE} for k in cg.kinds.values())
    assert cg.n_edges == 3


def test_shared_radio_is_not_colocation(star3):
    cg = build_emmcg(star3, 2, {0: (0, 0), 1: (0, 0), 2: (1, 0)})
    assert cg.edge_kind(0, 1) == {RANGE}
    assert cg.edge_kind(0, 2) == {RANGE, COLOCATION}


@pytest.mark.parametrize("ratio", [1, 2, 3])
def test_five_node_path_matches_brute_force(ratio):
    topo = make_topology([(250.0 * i, 0.0) for i in range(5)], [(i, i + 1) for i in range(4)])
    cg = build_emmcg(topo, ratio)
    assert set(cg.edges()) == oracles.conflict_pairs(topo, ratio)


def test_five_node_path_x2_edges():
    # links 0..3 along a line; I_r = 500 m reaches two spacings from any endpoint
    topo = make_topology([(250.0 * i, 0.0) for i in range(5)], [(i, i + 1) for i in range(4)])
    assert build_emmcg(topo, 2).edges() == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    assert build_emmcg(topo, 1).edges() == [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]


def test_emmcg_matches_brute_force_on_random_graphs():
    rng = np.random.default_rng(11)
    for _ in range(60):
        topo = oracles.random_small_topology(rng, max_links=30, n_nodes=int(rng.integers(4, 14)),
                                             side=1200.0)
        ratio = int(rng.integers(1, 4))
        cg = build_emmcg(topo, ratio)
        assert set(cg.edges()) == oracles.conflict_pairs(topo, ratio)
        for a, b in cg.edges():
            assert a != b and cg.has_edge(a, b) and cg.has_edge(b, a)


def test_bad_ratio():
    topo = make_topology([(0, 0), (10, 0)], [(0, 1)])
    for bad in (0, -1, 1.5):
        with pytest.raises(ConflictGraphError):
            build_emmcg(topo, bad)


@pytest.fixture
def clique3(triangle):
    return build_emmcg(triangle, 2)


def test_interference_degree_examples(clique3):
    isolated = make_topology([(0, 0), (100, 0)], [(0, 1)])
    assert interference_degree(build_emmcg(isolated), {0: 1}, 0) == 0
    assert [interference_degree(clique3, {0: 1, 1: 1, 2: 1}, l) for l in range(3)] == [2, 2, 2]
    assert [interference_degree(clique3, {0: 1, 1: 2, 2: 3}, l) for l in range(3)] == [0, 0, 0]


def test_interference_degree_unknown_link(clique3):
    with pytest.raises(ConflictGraphError):
        interference_degree(clique3, {0: 1, 1: 1, 2: 1}, 9)


def test_tid_examples(clique3):
    assert total_interference_degree(clique3, {0: 1, 1: 1, 2: 1}) == 3
    assert total_interference_degree(clique3, {0: 1, 1: 2, 2: 3}) == 0


def test_tid_single_channel_is_edge_count(rwmn, rwmn_cg):
    assert total_interference_degree(rwmn_cg, {l.id: 0 for l in rwmn.links}) == rwmn_cg.n_edges


def test_degree_sum_identity_and_oracles():
    rng = np.random.default_rng(5)
    for _ in range(200):
        topo = oracles.random_small_topology(rng)
        cg = build_emmcg(topo, 2)
        pairs = oracles.conflict_pairs(topo, 2)
        lcm = oracles.random_lcm(rng, topo, channels=int(rng.integers(1, 5)))
        tid = total_interference_degree(cg, lcm)
        assert tid == oracles.tid(pairs, lcm)
        assert sum(interference_degree(cg, lcm, l) for l in lcm) == 2 * tid
        for l in lcm:
            assert interference_degree(cg, lcm, l) == oracles.interference_degree(pairs, lcm, l)


def test_tid_permutation_invariant_and_bounded_by_single():
    rng = np.random.default_rng(8)
    for _ in range(200):
        topo = oracles.random_small_topology(rng)
        cg = build_emmcg(topo, 2)
        lcm = oracles.random_lcm(rng, topo)
        perm = rng.permutation(4)
        relabelled = {l: int(perm[c]) for l, c in lcm.items()}
        assert total_interference_degree(cg, relabelled) == total_interference_degree(cg, lcm)
        single = {l: 0 for l in lcm}
        assert total_interference_degree(cg, single) >= total_interference_degree(cg, lcm)


def test_dump_is_sorted_edge_list(rwmn, rwmn_cg):
    ca = run_ca_scheme("EIZM", rwmn, rwmn_cg, 4, seed=1)
    cg = build_emmcg(rwmn, 2, ca.link_radios)
    lines = cg.dump().splitlines()
    parsed = [(int(a), int(b), kind) for a, b, kind in (l.split() for l in lines)]
    assert [(a, b) for a, b, _ in parsed] == sorted(rwmn_cg.edges())
    assert {k for *_, k in parsed} <= {"range", "colocation+range"}
    assert any(k == "colocation+range" for *_, k in parsed)
    # co-location edges only join links that share a node
    for a, b, kind in parsed:
        if "colocation" in kind:
            assert set(rwmn.links[a].nodes) & set(rwmn.links[b].nodes)
    lcm, _ = live_link_channels(rwmn, ca)
    assert total_interference_degree(cg, lcm) == total_interference_degree(rwmn_cg, lcm)
