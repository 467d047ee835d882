import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import (
    EDGE,
    PATH3,
    TRIANGLE,
    exhaustive_mining,
    oracle_vertex_sets,
    random_connected_structure,
    random_rcg,
    rcg_from,
    to_nx,
)
from rcgcat.canon import (
    Structure,
    canonical_form,
    connected_induced_substructures,
    is_connected,
)
from rcgcat.extract import EmbeddingCache, extract_subrcgs
from rcgcat.structmine import MinedStructure, contains, dump_mined, load_mined, mine_frequent


def all_connected_graphs(n):
    pairs = list(itertools.combinations(range(n), 2))
    for mask in range(1 << len(pairs)):
        edges = [p for i, p in enumerate(pairs) if mask >> i & 1]
        if is_connected(n, edges):
            yield edges


def isomorphism_classes(n):
    """Connected n-vertex graphs grouped by networkx isomorphism (the oracle)."""
    reps = []
    for edges in all_connected_graphs(n):
        g = to_nx(n, edges)
        for r in reps:
            if nx.is_isomorphic(g, r[0]):
                r[1].append(edges)
                break
        else:
            reps.append((g, [edges]))
    return [members for _, members in reps]


def test_path_in_any_vertex_order():
    codes = {canonical_form(3, [(p[0], p[1]), (p[1], p[2])])
             for p in itertools.permutations(range(3))}
    assert len(codes) == 1


def test_triangle_differs_from_path():
    assert TRIANGLE.canon != PATH3.canon


def test_six_connected_four_vertex_graphs():
    assert len({canonical_form(4, e) for e in all_connected_graphs(4)}) == 6
    assert len(isomorphism_classes(4)) == 6


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_canon_is_exact_isomorphism_invariant(n):
    classes = isomorphism_classes(n)
    codes = []
    for members in classes:
        c = {canonical_form(n, e) for e in members}
        assert len(c) == 1
        codes.append(c.pop())
    assert len(set(codes)) == len(classes)


def test_canon_six_vertices_random_relabelling():
    rng = np.random.default_rng(0)
    for _ in range(100):
        s = random_connected_structure(rng, 6, 0.3)
        perm = rng.permutation(6)
        assert canonical_form(6, [(perm[u], perm[v]) for u, v in s.edges]) == s.canon


def test_canon_errors():
    with pytest.raises(ValueError, match="connected"):
        canonical_form(3, [(0, 1)])
    with pytest.raises(ValueError):
        canonical_form(7, [(i, i + 1) for i in range(6)])


def test_structure_dict_round_trip_and_check():
    assert Structure.from_dict(TRIANGLE.to_dict()) == TRIANGLE
    with pytest.raises(ValueError):
        Structure.from_dict({"n": 3, "edges": [[0, 1], [1, 2]], "canon": TRIANGLE.canon})


def test_connected_induced_substructures():
    assert connected_induced_substructures(TRIANGLE, 2) == [EDGE]
    star = Structure.from_edges(5, [(0, i) for i in range(1, 5)])
    assert connected_induced_substructures(star, 2) == [EDGE]
    assert connected_induced_substructures(star, 3) == [PATH3]


def test_contains_examples():
    single = Structure.from_edges(1, [])
    assert contains(single, rcg_from([], n=1))
    square = rcg_from([(0, 1), (1, 2), (2, 3), (3, 0)])
    assert not contains(TRIANGLE, square)
    assert contains(PATH3, square)


def test_contains_matches_subset_oracle():
    rng = np.random.default_rng(7)
    cache = EmbeddingCache(4)
    for _ in range(150):
        g = random_rcg(rng, int(rng.integers(1, 11)), float(rng.uniform(0.1, 0.7)))
        s = random_connected_structure(rng, int(rng.integers(1, 5)))
        expected = bool(oracle_vertex_sets(s, g))
        assert contains(s, g) == expected
        assert contains(s, g, cache) == expected
        assert contains(s, g) == bool(extract_subrcgs(s, g))


def test_mining_edge_in_all_graphs():
    graphs = [rcg_from([(0, 1)]), rcg_from([(0, 1), (1, 2)]), rcg_from([(0, 1), (1, 2), (0, 2)])]
    mined = mine_frequent(graphs, min_support=0.5, max_structure_size=4)
    assert MinedStructure(EDGE, 1.0) in mined
    assert TRIANGLE.canon not in {m.canon for m in mined}


@pytest.mark.parametrize("seed", range(8))
def test_mining_matches_exhaustive_oracle(seed):
    rng = np.random.default_rng(seed)
    graphs = [random_rcg(rng, int(rng.integers(2, 9)), float(rng.uniform(0.2, 0.6))) for _ in range(5)]
    min_support = float(rng.choice([0.2, 0.4, 0.6]))
    mined = mine_frequent(graphs, min_support, 4)
    assert [(m.canon, m.support) for m in mined] == exhaustive_mining(graphs, min_support, 4)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_mining_properties(seed):
    rng = np.random.default_rng(seed)
    graphs = [random_rcg(rng, int(rng.integers(3, 9)), 0.4) for _ in range(6)]
    mined = mine_frequent(graphs, 0.1, 5)
    # order independence
    order = rng.permutation(len(graphs))
    assert mine_frequent([graphs[i] for i in order], 0.1, 5) == mined
    # anti-monotonicity
    support = {m.canon: m.support for m in mined}
    for m in mined:
        for k in range(2, m.n):
            for sub in connected_induced_substructures(m.structure, k):
                assert support[sub.canon] >= m.support


def test_mining_errors():
    with pytest.raises(ValueError, match="empty"):
        mine_frequent([], 0.5)
    with pytest.raises(ValueError):
        mine_frequent([rcg_from([(0, 1)])], 0.0)
    with pytest.raises(ValueError):
        mine_frequent([rcg_from([(0, 1)])], 0.5, max_structure_size=7)


def test_mined_json_round_trip():
    rng = np.random.default_rng(1)
    mined = mine_frequent([random_rcg(rng, 7, 0.5) for _ in range(4)], 0.3, 4)
    assert load_mined(dump_mined(mined)) == mined
