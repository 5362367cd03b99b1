"""Directed graphs and the connectivity predicates the convergence theory runs on.

Graphs are immutable values: a node set ``{1, .., n}`` and a set of ordered
arcs ``(i, j)`` with ``i != j``.  Self-arcs are rejected at construction;
the averaging dynamics treats every node as its own neighbor implicitly, so
a stored self-arc is always a generator bug.  Node counts stay small
(``n <= 64``), which keeps every predicate here a straightforward
reachability computation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

Arc = tuple[int, int]


class Digraph:
    """Immutable directed graph on nodes ``1..n`` with no self-arcs.

    Parameters
    ----------
    n : int
        Number of nodes, at least 1.
    arcs : iterable of (int, int)
        Ordered pairs ``(i, j)`` meaning an arc from ``i`` to ``j``.

    Raises
    ------
    ValueError
        If ``n < 1``, an endpoint is outside ``[1, n]``, or an arc is a
        self-loop.
    """

    __slots__ = ("n", "arcs", "_out", "_in")

    def __init__(self, n: int, arcs: Iterable[Arc] = ()):
        if n < 1:
            raise ValueError(f"node count must be >= 1, got {n}")
        arc_set = frozenset((int(i), int(j)) for i, j in arcs)
        for i, j in arc_set:
            if i == j:
                raise ValueError(f"self-arc ({i},{i}) is not allowed")
            if not (1 <= i <= n and 1 <= j <= n):
                raise ValueError(f"arc ({i},{j}) outside node range [1,{n}]")
        self.n = n
        self.arcs = arc_set
        out: dict[int, list[int]] = {i: [] for i in range(1, n + 1)}
        inn: dict[int, list[int]] = {i: [] for i in range(1, n + 1)}
        for i, j in arc_set:
            out[i].append(j)
            inn[j].append(i)
        self._out = out
        self._in = inn

    @classmethod
    def complete(cls, n: int) -> "Digraph":
        """All n(n-1) arcs present."""
        return cls(n, ((i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j))

    @classmethod
    def empty(cls, n: int) -> "Digraph":
        return cls(n)

    def nodes(self) -> range:
        return range(1, self.n + 1)

    def has_arc(self, i: int, j: int) -> bool:
        return (i, j) in self.arcs

    def out_neighbors(self, i: int) -> list[int]:
        return self._out[i]

    def in_neighbors(self, i: int) -> list[int]:
        return self._in[i]

    def reverse(self) -> "Digraph":
        """Graph with every arc flipped."""
        return Digraph(self.n, ((j, i) for i, j in self.arcs))

    def to_json(self) -> dict:
        """JSON object ``{"n": int, "arcs": [[i, j], ...]}``, arcs sorted
        lexicographically so serialization is byte-stable."""
        return {"n": self.n, "arcs": [list(a) for a in sorted(self.arcs)]}

    @classmethod
    def from_json(cls, obj: Mapping) -> "Digraph":
        return cls(obj["n"], ((int(i), int(j)) for i, j in obj["arcs"]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Digraph):
            return NotImplemented
        return self.n == other.n and self.arcs == other.arcs

    def __hash__(self) -> int:
        return hash((self.n, self.arcs))

    def __repr__(self) -> str:
        return f"Digraph(n={self.n}, arcs={sorted(self.arcs)})"


@dataclass(frozen=True)
class LevelFunction:
    """Longest-path levels of an acyclic rooted graph.

    ``levels[root] == 0``, ``levels[j]`` is the length of the longest
    directed path from the root to ``j``, and ``d_star`` is the maximum
    level.  Every level in ``[0, d_star]`` is attained by at least one node.
    """

    root: int
    levels: Mapping[int, int]
    d_star: int


def _reachable_count(g: Digraph, start: int) -> int:
    seen = bytearray(g.n + 1)
    seen[start] = 1
    stack = [start]
    count = 1
    while stack:
        u = stack.pop()
        for v in g._out[u]:
            if not seen[v]:
                seen[v] = 1
                count += 1
                stack.append(v)
    return count


def roots(g: Digraph) -> set[int]:
    """Nodes from which every node is reachable along directed paths.

    Empty exactly when the graph is not quasi-strongly connected.
    """
    return {i for i in g.nodes() if _reachable_count(g, i) == g.n}


def is_quasi_strongly_connected(g: Digraph) -> bool:
    """True iff some node reaches every other node (a root exists)."""
    return any(_reachable_count(g, i) == g.n for i in g.nodes())


def is_bidirectional(g: Digraph) -> bool:
    """True iff the arc set is symmetric: (i,j) present iff (j,i) present."""
    return all((j, i) in g.arcs for i, j in g.arcs)


def is_acyclic(g: Digraph) -> bool:
    """True iff the graph contains no directed cycle (Kahn peeling)."""
    return len(_topological_order(g)) == g.n


def _topological_order(g: Digraph) -> list[int]:
    """Topological order of the peelable part; shorter than n iff cyclic."""
    indeg = {i: len(g._in[i]) for i in g.nodes()}
    queue = [i for i in g.nodes() if indeg[i] == 0]
    order: list[int] = []
    while queue:
        u = queue.pop()
        order.append(u)
        for v in g._out[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return order


def union(gs: Iterable[Digraph], *, n: int | None = None) -> Digraph:
    """Joint graph: the union of the arc sets over a sequence of graphs.

    All graphs must share the same node count.  An empty sequence needs an
    explicit ``n`` and yields the empty graph (the identity element).
    """
    arcs: set[Arc] = set()
    seen_n: int | None = None
    for g in gs:
        if seen_n is None:
            seen_n = g.n
        elif g.n != seen_n:
            raise ValueError(f"union over mismatched node counts {seen_n} and {g.n}")
        arcs |= g.arcs
    if seen_n is None:
        if n is None:
            raise ValueError("union of an empty sequence requires an explicit n")
        seen_n = n
    elif n is not None and n != seen_n:
        raise ValueError(f"declared n={n} does not match graphs' n={seen_n}")
    return Digraph(seen_n, arcs)


def hbar_levels(g: Digraph) -> LevelFunction:
    """Longest-path level of every node in an acyclic quasi-strongly
    connected graph.

    Such a graph has exactly one root; the level of a node is the length of
    the longest directed path from that root to it.  Levels are computed by
    a dynamic program over a topological order, which the acyclicity
    precondition makes well defined.

    Raises
    ------
    ValueError
        If the graph is cyclic or has no root.
    """
    order = _topological_order(g)
    if len(order) != g.n:
        raise ValueError("level function requires an acyclic graph")
    rs = roots(g)
    if not rs:
        raise ValueError("level function requires a quasi-strongly connected graph")
    # acyclic + quasi-strongly connected => the root is unique
    root = next(iter(rs))
    levels = {root: 0}
    for u in order:
        if u not in levels:
            continue
        base = levels[u]
        for v in g._out[u]:
            if levels.get(v, -1) < base + 1:
                levels[v] = base + 1
    d_star = max(levels.values())
    return LevelFunction(root=root, levels=levels, d_star=d_star)


def level_sets(lf: LevelFunction) -> dict[int, set[int]]:
    """Preimages of the level function, keyed by level."""
    out: dict[int, set[int]] = {m: set() for m in range(lf.d_star + 1)}
    for node, m in lf.levels.items():
        out[m].add(node)
    return out
