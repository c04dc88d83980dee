"""Palm trees, path finding, side-admissibility, LR planarity, candidate splits."""

from itertools import combinations

import numpy as np
import pytest

from rdnet.planarity import (
    DisconnectedInput,
    EmbeddingState,
    NoCandidate,
    Path,
    admissible_side,
    dfs_palm,
    embed_or_split,
    find_paths,
    is_planar,
)
from oracles import all_connected_graphs, is_planar_oracle

# the worked-example hat graph: 4 boundary + interior 5 on edge (1,3) + interior 6
HAT_EDGES = [(1, 2), (2, 3), (3, 4), (1, 4), (1, 5), (3, 5), (2, 5), (4, 5),
             (5, 6), (1, 6), (2, 6), (3, 6), (4, 6)]
HAT_PROTECTED = [(1, 2), (2, 3), (3, 4), (1, 4)]


def k5():
    return list(combinations(range(1, 6), 2))


def k33():
    return [(a, b) for a in (1, 2, 3) for b in (4, 5, 6)]


def test_palm_triangle():
    palm = dfs_palm(3, [(1, 2), (2, 3), (1, 3)])
    assert palm.tree_arcs == ((1, 2), (2, 3))
    assert palm.back_edges == ((3, 1),)


def test_palm_path_graph_has_no_back_edges():
    palm = dfs_palm(4, [(1, 2), (2, 3), (3, 4)])
    assert palm.back_edges == ()
    assert palm.tree_arcs == ((1, 2), (2, 3), (3, 4))


def test_palm_disconnected_raises():
    with pytest.raises(DisconnectedInput):
        dfs_palm(4, [(1, 2), (3, 4)])


def test_palm_worked_example():
    palm = dfs_palm(6, HAT_EDGES)
    assert palm.tree_arcs == ((1, 2), (2, 3), (3, 4), (4, 5), (5, 6))
    assert palm.back_edges == ((4, 1), (5, 1), (5, 2), (5, 3),
                               (6, 1), (6, 2), (6, 3), (6, 4))
    assert palm.low1[5] == 1 and palm.low1[6] == 1


def test_find_paths_worked_example():
    """The six-vertex hat graph: cycle 1-2-3-4-5-6-1 and seven single-edge paths."""
    palm = dfs_palm(6, HAT_EDGES)
    decomp = find_paths(palm)
    assert decomp.cycle == (1, 2, 3, 4, 5, 6, 1)
    got = [p.vertices for p in decomp.paths]
    # the seven expected single-back-edge paths
    assert sorted(got) == sorted([(6, 2), (6, 3), (6, 4), (4, 1),
                                  (5, 3), (5, 2), (5, 1)])
    # emission order consistent with the embedding walkthrough (vertex 6's
    # paths, then vertex 5's, then 4-1 which triggers the split)
    assert got == [(6, 2), (6, 3), (6, 4), (5, 1), (5, 2), (5, 3), (4, 1)]


def test_find_paths_triangle_cycle_only():
    decomp = find_paths(dfs_palm(3, [(1, 2), (2, 3), (1, 3)]))
    assert decomp.cycle == (1, 2, 3, 1)
    assert decomp.paths == ()


def test_find_paths_edge_conservation():
    for n, edges in ((4, list(combinations(range(1, 5), 2))), (6, HAT_EDGES)):
        decomp = find_paths(dfs_palm(n, edges))
        total = (len(decomp.cycle) - 1) + sum(p.edge_count() for p in decomp.paths)
        assert total == len(edges)


def test_admissible_side_rules():
    state = EmbeddingState()
    path51 = Path(vertices=(5, 1), segment=0)
    assert admissible_side(state, path51, "left")
    state.left.append((6, 3, 0))  # back edge into 3 embedded on the left
    assert not admissible_side(state, path51, "left")   # 1 < 3 < 5
    path53 = Path(vertices=(5, 3), segment=1)
    assert admissible_side(state, path53, "left")        # k = 3 = j1: strict
    assert admissible_side(state, path51, "right")


def test_admissible_side_walkthrough():
    """After 6-2, 6-3, 6-4 are placed, 5-1 must change sides and 4-1 fits
    nowhere; the blocking sets are {5-2, 5-3} and {6-2, 6-3}."""
    palm = dfs_palm(6, HAT_EDGES)
    decomp = find_paths(palm)
    state = EmbeddingState()
    conflict_at = None
    for idx, path in enumerate(decomp.paths):
        if admissible_side(state, path, "left"):
            state.left.append((path.start, path.target, idx))
        elif admissible_side(state, path, "right"):
            state.right.append((path.start, path.target, idx))
        else:
            conflict_at = path
            break
    assert conflict_at is not None and conflict_at.vertices == (4, 1)
    left_block = frozenset((s, t) for s, t, _ in state.left if 1 < t < 4)
    right_block = frozenset((s, t) for s, t, _ in state.right if 1 < t < 4)
    assert {left_block, right_block} == {frozenset({(6, 2), (6, 3)}),
                                         frozenset({(5, 2), (5, 3)})}


def test_is_planar_classics():
    assert not is_planar(5, k5())
    assert not is_planar(6, k33())
    assert is_planar(4, list(combinations(range(1, 5), 2)))
    assert is_planar(6, HAT_EDGES) is False


def test_is_planar_euler_bound():
    # any graph with |E| > 3|V| - 6 is rejected by the fast bound
    edges = list(combinations(range(1, 7), 2))  # K6: 15 > 12
    assert not is_planar(6, edges)


def test_is_planar_exhaustive_small():
    for n in (3, 4, 5):
        for pairs in all_connected_graphs(n):
            assert is_planar(n, pairs) == is_planar_oracle(n, pairs), pairs


def test_is_planar_random_n7():
    rng = np.random.default_rng(7)
    all_pairs = list(combinations(range(1, 8), 2))
    checked = 0
    while checked < 300:
        mask = rng.random(len(all_pairs)) < rng.uniform(0.2, 0.8)
        pairs = [p for p, keep in zip(all_pairs, mask) if keep]
        got = is_planar(7, pairs)
        assert got == is_planar_oracle(7, pairs), pairs
        checked += 1


def test_embed_or_split_planar_is_singleton():
    edges = list(combinations(range(1, 5), 2))
    cand = embed_or_split(4, edges)
    assert cand.graphs == (tuple(sorted((min(u, v), max(u, v)) for u, v in edges)),)
    assert cand.dropped == ((),)


def test_embed_or_split_k5_candidates_planar():
    cand = embed_or_split(5, k5())
    assert len(cand.graphs) >= 1
    for graph in cand.graphs:
        assert is_planar(5, graph)
        assert is_planar_oracle(5, graph)


def test_embed_or_split_worked_example_two_candidates():
    cand = embed_or_split(6, HAT_EDGES, protected=HAT_PROTECTED)
    assert len(cand.graphs) == 2
    dropped = {frozenset(d) for d in cand.dropped}
    assert dropped == {frozenset({(2, 5), (3, 5)}), frozenset({(2, 6), (3, 6)})}
    for graph in cand.graphs:
        assert is_planar(6, graph)
        assert set(HAT_PROTECTED) <= set(graph)
        # same vertex set: every vertex still touched
        touched = {v for e in graph for v in e}
        assert touched == set(range(1, 7))
    # the two candidates swap the roles of interior nodes 5 and 6
    deg = []
    for graph in cand.graphs:
        counts = {v: 0 for v in range(1, 7)}
        for u, v in graph:
            counts[u] += 1
            counts[v] += 1
        deg.append((counts[5], counts[6]))
    assert sorted(deg) == sorted([(deg[0][1], deg[0][0]), deg[0]])


def test_embed_or_split_protected_rejection():
    # protecting everything on K5 leaves no candidate
    with pytest.raises(NoCandidate):
        embed_or_split(5, k5(), protected=k5())


def test_embed_or_split_deterministic():
    a = embed_or_split(6, HAT_EDGES, protected=HAT_PROTECTED)
    b = embed_or_split(6, HAT_EDGES, protected=HAT_PROTECTED)
    assert a.graphs == b.graphs


def test_embed_or_split_cap():
    cand = embed_or_split(6, k33(), cap=3)
    assert len(cand.graphs) <= 3
