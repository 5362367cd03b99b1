"""Graph predicates against independent reachability/cycle/path oracles."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from consensus_lab.graphs import (
    Digraph,
    hbar_levels,
    is_acyclic,
    is_bidirectional,
    is_quasi_strongly_connected,
    level_sets,
    roots,
    union,
)
from consensus_lab.processes import random_acyclic_rooted_digraph
from consensus_lab.rng import RngStream


# ---------------------------------------------------------------------------
# independent oracles


def closure_roots(g: Digraph) -> set[int]:
    """Roots from the boolean transitive closure of the adjacency matrix."""
    reach = np.eye(g.n, dtype=bool)
    for i, j in g.arcs:
        reach[i - 1, j - 1] = True
    for _ in range(g.n):
        reach = reach | (reach @ reach)
    return {i + 1 for i in range(g.n) if reach[i].all()}


def has_cycle_by_enumeration(g: Digraph) -> bool:
    """Cycle detection by walking every simple path (tiny graphs only)."""

    def walk(node, visited):
        for nxt in g.out_neighbors(node):
            if nxt in visited:
                return True
            if walk(nxt, visited | {nxt}):
                return True
        return False

    return any(walk(i, {i}) for i in g.nodes())


def longest_paths_from(g: Digraph, source: int) -> dict[int, int]:
    """Longest path lengths by enumerating every simple path (tiny graphs)."""
    best = {source: 0}

    def walk(node, length):
        for nxt in g.out_neighbors(node):
            if best.get(nxt, -1) < length + 1:
                best[nxt] = length + 1
            walk(nxt, length + 1)

    walk(source, 0)
    return best


def all_digraphs(n: int):
    pairs = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
    for r in range(len(pairs) + 1):
        for subset in itertools.combinations(pairs, r):
            yield Digraph(n, subset)


@st.composite
def digraphs(draw, max_n=7):
    n = draw(st.integers(1, max_n))
    pairs = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
    arcs = draw(st.lists(st.sampled_from(pairs), max_size=len(pairs)) if pairs else st.just([]))
    return Digraph(n, arcs)


# ---------------------------------------------------------------------------
# construction


def test_rejects_self_arcs():
    with pytest.raises(ValueError, match="self-arc"):
        Digraph(2, [(1, 1)])


def test_rejects_out_of_range():
    with pytest.raises(ValueError, match="outside node range"):
        Digraph(2, [(1, 3)])


def test_rejects_nonpositive_n():
    with pytest.raises(ValueError):
        Digraph(0)


def test_arc_count_bounded():
    g = Digraph.complete(5)
    assert len(g.arcs) == 5 * 4


def test_json_round_trip_and_sorted_arcs():
    g = Digraph(3, [(2, 1), (1, 3), (1, 2)])
    obj = g.to_json()
    assert obj == {"n": 3, "arcs": [[1, 2], [1, 3], [2, 1]]}
    assert Digraph.from_json(obj) == g


# ---------------------------------------------------------------------------
# quasi-strong connectivity and roots


def test_complete_graph_all_roots():
    g = Digraph.complete(3)
    assert is_quasi_strongly_connected(g)
    assert roots(g) == {1, 2, 3}


def test_empty_two_nodes_not_connected():
    assert not is_quasi_strongly_connected(Digraph(2))


def test_star_root():
    g = Digraph(3, [(1, 2), (1, 3)])
    assert is_quasi_strongly_connected(g)
    assert roots(g) == {1} == closure_roots(g)


def test_single_node_is_its_own_root():
    assert roots(Digraph(1)) == {1}


def test_roots_exhaustive_small_n():
    for n in (1, 2, 3):
        for g in all_digraphs(n):
            assert roots(g) == closure_roots(g)
            assert bool(roots(g)) == is_quasi_strongly_connected(g)


@given(digraphs())
@settings(max_examples=150, deadline=None)
def test_roots_match_closure_oracle(g):
    assert roots(g) == closure_roots(g)
    assert bool(roots(g)) == is_quasi_strongly_connected(g)


# ---------------------------------------------------------------------------
# bidirectionality and acyclicity


@pytest.mark.parametrize(
    "arcs,expected",
    [([(1, 2), (2, 1)], True), ([(1, 2)], False), ([], True)],
)
def test_bidirectional(arcs, expected):
    assert is_bidirectional(Digraph(2, arcs)) is expected


@pytest.mark.parametrize(
    "arcs,expected",
    [([(1, 2), (2, 3)], True), ([(1, 2), (2, 1)], False), ([(1, 2), (2, 3), (3, 1)], False)],
)
def test_acyclic(arcs, expected):
    assert is_acyclic(Digraph(3, arcs)) is expected


@given(digraphs(max_n=5))
@settings(max_examples=100, deadline=None)
def test_acyclic_matches_enumeration_oracle(g):
    assert is_acyclic(g) == (not has_cycle_by_enumeration(g))


@given(digraphs())
@settings(max_examples=100, deadline=None)
def test_union_with_reverse_is_bidirectional(g):
    assert is_bidirectional(union([g, g.reverse()]))


# ---------------------------------------------------------------------------
# union


def test_union_idempotent():
    g = Digraph(3, [(1, 2)])
    assert union([g, g]) == g


def test_union_merges_arcs():
    a = Digraph(3, [(1, 2)])
    b = Digraph(3, [(2, 3)])
    assert union([a, b]).arcs == frozenset({(1, 2), (2, 3)})


def test_union_empty_sequence_needs_n():
    assert union([], n=4) == Digraph(4)
    with pytest.raises(ValueError):
        union([])


def test_union_mismatched_n():
    with pytest.raises(ValueError, match="mismatched"):
        union([Digraph(2), Digraph(3)])


@given(digraphs(max_n=5), st.data())
@settings(max_examples=60, deadline=None)
def test_union_associative_commutative(g, data):
    pairs = [(i, j) for i in range(1, g.n + 1) for j in range(1, g.n + 1) if i != j]
    h = Digraph(g.n, data.draw(st.lists(st.sampled_from(pairs), max_size=len(pairs)) if pairs else st.just([])))
    k = Digraph(g.n, data.draw(st.lists(st.sampled_from(pairs), max_size=len(pairs)) if pairs else st.just([])))
    assert union([g, h]) == union([h, g])
    assert union([union([g, h]), k]) == union([g, union([h, k])])


# ---------------------------------------------------------------------------
# level function


def test_levels_chain():
    lf = hbar_levels(Digraph(3, [(1, 2), (2, 3)]))
    assert lf.root == 1
    assert [lf.levels[i] for i in (1, 2, 3)] == [0, 1, 2]
    assert lf.d_star == 2


def test_levels_single_node():
    lf = hbar_levels(Digraph(1))
    assert lf.levels == {1: 0} and lf.d_star == 0


def test_levels_take_longest_path():
    lf = hbar_levels(Digraph(4, [(1, 2), (1, 3), (2, 3), (3, 4)]))
    assert {i: lf.levels[i] for i in (1, 2, 3, 4)} == {1: 0, 2: 1, 3: 2, 4: 3}


def test_levels_preconditions():
    with pytest.raises(ValueError, match="acyclic"):
        hbar_levels(Digraph(2, [(1, 2), (2, 1)]))
    with pytest.raises(ValueError, match="quasi-strongly"):
        hbar_levels(Digraph(2))


def test_levels_surjective_on_random_acyclic_graphs():
    stream = RngStream(2024)
    for case in range(200):
        gen = stream.child(case).generator()
        n = int(gen.integers(2, 9))
        g = random_acyclic_rooted_digraph(n, gen)
        lf = hbar_levels(g)
        sets = level_sets(lf)
        assert all(sets[m] for m in range(lf.d_star + 1))
        # cross-check against the path-enumeration oracle
        assert lf.levels == longest_paths_from(g, lf.root)
