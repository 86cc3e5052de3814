import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import hypergraphs, random_edges
from nibble import errors
from nibble.applications import latin_instance, steiner_hypergraph
from nibble.hypergraph import (
    Hypergraph,
    build,
    codegree,
    degree,
    edge_subgraph,
    from_hgr,
    induced,
    is_matching,
    load_hgr,
    regularize,
    save_hgr,
    stats,
    to_hgr,
)


def test_build_examples(path2, single3):
    assert path2.num_edges == 2 and path2.r == 2
    assert single3.edges == ((0, 1, 2),)
    with pytest.raises(errors.NonUniformEdge):
        build(2, 2, [[0, 0]])


def test_build_rejects_bad_input():
    with pytest.raises(errors.NonUniformEdge):
        build(3, 4, [[0, 1]])
    with pytest.raises(errors.VertexOutOfRange):
        build(2, 2, [[0, 2]])
    with pytest.raises(errors.DuplicateEdge):
        build(2, 3, [[0, 1], [1, 0]])


def test_build_sorts_within_edges_and_keeps_order():
    H = build(3, 5, [[4, 0, 2], [3, 1, 0]])
    assert H.edges == ((0, 2, 4), (0, 1, 3))
    with pytest.raises(ValueError):
        H.edge_array[0, 0] = 9


def test_degree_and_codegree(path2, single3):
    assert degree(path2, 1) == 2
    assert degree(single3, 0) == 1
    assert codegree(single3, 0, 1) == 1
    assert codegree(path2, 0, 2) == 0
    with pytest.raises(errors.SameVertex):
        codegree(path2, 1, 1)
    with pytest.raises(errors.VertexOutOfRange):
        degree(path2, 3)


def test_stats_examples(path2):
    st_ = stats(path2)
    assert (st_.max_degree, st_.min_degree, st_.max_codegree) == (2, 1, 1)
    S = steiner_hypergraph(7, 3, 2).hypergraph
    st_ = stats(S)
    assert (st_.max_degree, st_.min_degree, st_.max_codegree) == (5, 5, 1)
    assert all(degree(S, v) == math.comb(5, 1) for v in range(S.num_vertices))
    L = latin_instance(5).hypergraph
    st_ = stats(L)
    assert (st_.max_degree, st_.min_degree, st_.max_codegree) == (5, 5, 1)


def test_isolated_vertex_counts_for_min_degree():
    H = build(2, 4, [[0, 1]])
    assert stats(H).min_degree == 0


def test_codegree_pair_index_matches_scan(rng):
    edges = random_edges(rng, 3, 60, 6000)
    H = build(3, 60, edges)
    assert H.num_edges * 9 > 50_000
    e = np.array(edges)
    for u, v in [(0, 1), (5, 17), (30, 59), (2, 40)]:
        direct = int(np.count_nonzero((e == u).any(axis=1) & (e == v).any(axis=1)))
        assert H.codegree(u, v) == direct


def test_is_matching_examples(path2):
    assert not is_matching(path2, {0, 1})
    assert is_matching(path2, {0})
    assert is_matching(path2, set())
    with pytest.raises(errors.UnknownEdgeId):
        is_matching(path2, {5})


def test_fano_blocks_form_a_matching():
    inst = steiner_hypergraph(7, 3, 2)
    fano = [(0, 1, 2), (0, 3, 4), (0, 5, 6), (1, 3, 5), (1, 4, 6), (2, 3, 6), (2, 4, 5)]
    ids = [[i for i in range(35) if inst.block(i) == b][0] for b in fano]
    assert is_matching(inst.hypergraph, ids)
    verts = [v for e in ids for v in inst.hypergraph.edges[e]]
    assert sorted(verts) == list(range(21))


def test_induced_examples(path2, rng):
    sub, ids = induced(path2, {0, 1})
    assert sub.num_edges == 1 and ids == {0: 0}
    sub, ids = induced(path2, {0, 2})
    assert sub.num_edges == 0
    H = build(3, 40, random_edges(rng, 3, 40, 200))
    half = set(rng.choice(40, size=20, replace=False).tolist())
    sub, ids = induced(H, half)
    for old, new in ids.items():
        assert set(sub.edges[new]) <= half
        assert sub.edges[new] == H.edges[old]
    assert sub.num_edges == sum(set(e) <= half for e in H.edges)


def test_regularize_examples(single3, path2):
    R = regularize(single3, 1)
    assert R.num_vertices == 9 and R.num_edges == 3
    assert set(R.degrees.tolist()) == {1}
    R = regularize(path2, 2)
    st_ = R.stats()
    assert st_.max_degree == st_.min_degree == 2
    assert st_.max_codegree <= 1
    with pytest.raises(ValueError):
        regularize(path2, 1)
    with pytest.raises(errors.TooLarge):
        regularize(path2, 30)


def test_hgr_round_trip(tmp_path, rng):
    H = build(3, 30, random_edges(rng, 3, 30, 50))
    assert from_hgr(to_hgr(H)) == H
    p = tmp_path / "h.hgr"
    save_hgr(H, p)
    assert load_hgr(p) == H
    assert from_hgr("# comment\n2 3 1\n0 2\n").edges == ((0, 2),)
    with pytest.raises(errors.FormatError):
        from_hgr("2 3 2\n0 1\n")
    with pytest.raises(errors.FormatError):
        from_hgr("2 x 1\n0 1\n")


@given(hypergraphs())
def test_degree_sum_and_codegree_bound(H):
    assert int(H.degrees.sum()) == H.r * H.num_edges
    st_ = H.stats()
    assert st_.max_codegree <= st_.max_degree


@given(hypergraphs(max_edges=10), st.data())
def test_reinduce_with_superset_is_idempotent(H, data):
    sub_v = data.draw(st.sets(st.integers(0, H.num_vertices - 1)))
    extra = data.draw(st.sets(st.integers(0, H.num_vertices - 1)))
    A, _ = induced(H, sub_v)
    B, _ = induced(A, sub_v | extra)
    assert A == B


@given(hypergraphs(max_edges=12))
def test_is_matching_agrees_with_pairwise_brute_force(H):
    m = H.num_edges
    for mask in range(1 << m):
        ids = [i for i in range(m) if mask >> i & 1]
        brute = all(not set(H.edges[a]) & set(H.edges[b]) for a, b in itertools.combinations(ids, 2))
        assert is_matching(H, ids) == brute


@given(hypergraphs(r=2, max_vertices=5, max_edges=5), st.integers(0, 2))
def test_regularize_is_regular_and_keeps_codegree(H, extra):
    st_ = H.stats()
    target = st_.max_degree + extra
    if H.num_vertices * H.r ** max(1, target - st_.min_degree) > 200_000:
        return
    R = regularize(H, target)
    assert set(R.degrees.tolist()) == {target}
    if H.num_edges:
        assert R.max_codegree == st_.max_codegree
    assert R.num_edges == len(set(R.edges))


def test_edge_subgraph_maps_ids(path2):
    sub, ids = edge_subgraph(path2, [1])
    assert sub.edges == ((1, 2),) and ids == {1: 0}


def test_hypergraph_equality_and_hash():
    a = build(2, 3, [[0, 1]])
    b = Hypergraph(2, 3, np.array([[0, 1]]))
    assert a == b and hash(a) == hash(b)
    assert a != build(2, 4, [[0, 1]])
