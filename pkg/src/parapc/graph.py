"""Working skeleton, frozen adjacency snapshots, sepsets, DAGs and CPDAGs.

Nodes are integers ``0..p-1``; names only appear at the export boundary.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

Pair = tuple[int, int]


def _pair(x: int, y: int) -> Pair:
    return (x, y) if x < y else (y, x)


class Graph:
    """Undirected simple graph backed by a boolean adjacency matrix.

    Sorted neighbour tuples are cached per node and dropped whenever an
    incident edge changes.
    """

    def __init__(self, p: int, adjacency: np.ndarray | None = None):
        self.p = p
        if adjacency is None:
            adjacency = np.zeros((p, p), dtype=bool)
        self._adj = np.array(adjacency, dtype=bool)
        if self._adj.shape != (p, p):
            raise ValueError(f"adjacency must be {p}x{p}")
        if not (self._adj == self._adj.T).all() or self._adj.diagonal().any():
            raise ValueError("adjacency must be symmetric with an empty diagonal")
        self._nbrs: list[tuple[int, ...] | None] = [None] * p

    @classmethod
    def from_edges(cls, p: int, edges: Iterable[Pair]) -> "Graph":
        g = cls(p)
        for x, y in edges:
            g.add_edge(x, y)
        return g

    def copy(self) -> "Graph":
        return Graph(self.p, self._adj)

    @property
    def matrix(self) -> np.ndarray:
        m = self._adj.view()
        m.flags.writeable = False
        return m

    def has_edge(self, x: int, y: int) -> bool:
        return bool(self._adj[x, y])

    def add_edge(self, x: int, y: int) -> None:
        if x == y:
            raise ValueError(f"self-loop on node {x}")
        self._adj[x, y] = self._adj[y, x] = True
        self._nbrs[x] = self._nbrs[y] = None

    def remove_edge(self, x: int, y: int) -> None:
        self._adj[x, y] = self._adj[y, x] = False
        self._nbrs[x] = self._nbrs[y] = None

    def neighbors(self, x: int) -> tuple[int, ...]:
        nb = self._nbrs[x]
        if nb is None:
            nb = self._nbrs[x] = tuple(int(i) for i in np.flatnonzero(self._adj[x]))
        return nb

    def degree(self, x: int) -> int:
        return len(self.neighbors(x))

    def edges(self) -> list[Pair]:
        return adjacent_pairs(self)

    def n_edges(self) -> int:
        return int(self._adj.sum()) // 2

    def __eq__(self, other) -> bool:
        return isinstance(other, Graph) and self.p == other.p and bool((self._adj == other._adj).all())

    def __repr__(self) -> str:
        return f"Graph(p={self.p}, edges={self.edges()})"


@dataclass(frozen=True)
class AdjacencySnapshot:
    """Neighbour sets of every node, frozen at the start of a level."""

    neighbours: tuple[tuple[int, ...], ...]

    def adj(self, x: int) -> tuple[int, ...]:
        return self.neighbours[x]

    @property
    def p(self) -> int:
        return len(self.neighbours)


def complete_graph(p: int) -> Graph:
    if p < 1:
        raise ValueError("p must be >= 1")
    m = np.ones((p, p), dtype=bool)
    np.fill_diagonal(m, False)
    return Graph(p, m)


def snapshot(g: Graph) -> AdjacencySnapshot:
    return AdjacencySnapshot(tuple(g.neighbors(x) for x in range(g.p)))


def adjacent_pairs(g: Graph) -> list[Pair]:
    """Edges as ``(x, y)`` with ``x < y``, sorted lexicographically."""
    xs, ys = np.nonzero(np.triu(g.matrix, 1))
    return [(int(x), int(y)) for x, y in zip(xs, ys)]


class SepsetStore:
    """Separating set for every removed edge, keyed by the unordered pair."""

    def __init__(self):
        self._z: dict[Pair, tuple[int, ...]] = {}

    def add(self, x: int, y: int, z: Iterable[int]) -> None:
        z = tuple(sorted(z))
        if x in z or y in z:
            raise ValueError(f"sepset {z} of ({x}, {y}) contains an endpoint")
        self._z[_pair(x, y)] = z

    def get(self, x: int, y: int) -> tuple[int, ...] | None:
        return self._z.get(_pair(x, y))

    def __contains__(self, pair) -> bool:
        return _pair(*pair) in self._z

    def __len__(self) -> int:
        return len(self._z)

    def items(self) -> list[tuple[Pair, tuple[int, ...]]]:
        return sorted(self._z.items())

    def as_dict(self) -> dict[Pair, tuple[int, ...]]:
        return dict(self._z)

    def __eq__(self, other) -> bool:
        return isinstance(other, SepsetStore) and self._z == other._z

    def __repr__(self) -> str:
        return f"SepsetStore({dict(self.items())})"


@dataclass(frozen=True)
class DAG:
    """Directed acyclic graph over ``0..p-1``; construction rejects cycles."""

    p: int
    edges: frozenset[Pair]

    def __post_init__(self):
        edges = frozenset((int(a), int(b)) for a, b in self.edges)
        object.__setattr__(self, "edges", edges)
        for a, b in edges:
            if a == b or not (0 <= a < self.p and 0 <= b < self.p):
                raise ValueError(f"invalid edge {a}->{b} for p={self.p}")
            if (b, a) in edges:
                raise ValueError(f"cyclic graph: {a}<->{b}")
        if len(self.topological_order) != self.p:
            raise ValueError("cyclic graph")

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> "DAG":
        xs, ys = np.nonzero(m)
        return cls(m.shape[0], frozenset(zip(xs.tolist(), ys.tolist())))

    @cached_property
    def parents(self) -> tuple[tuple[int, ...], ...]:
        pa: list[list[int]] = [[] for _ in range(self.p)]
        for a, b in self.edges:
            pa[b].append(a)
        return tuple(tuple(sorted(x)) for x in pa)

    @cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        ch: list[list[int]] = [[] for _ in range(self.p)]
        for a, b in self.edges:
            ch[a].append(b)
        return tuple(tuple(sorted(x)) for x in ch)

    @cached_property
    def topological_order(self) -> tuple[int, ...]:
        indeg = [0] * self.p
        ch: list[list[int]] = [[] for _ in range(self.p)]
        for a, b in self.edges:
            indeg[b] += 1
            ch[a].append(b)
        ready = sorted(i for i in range(self.p) if indeg[i] == 0)
        order = []
        while ready:
            v = ready.pop(0)
            order.append(v)
            for c in sorted(ch[v]):
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
            ready.sort()
        return tuple(order)

    def skeleton(self) -> Graph:
        return Graph.from_edges(self.p, self.edges)

    def v_structures(self) -> set[tuple[int, int, int]]:
        """Triples ``(a, c, b)`` with ``a -> c <- b``, ``a < b`` non-adjacent."""
        out = set()
        for c in range(self.p):
            pa = self.parents[c]
            for i, a in enumerate(pa):
                for b in pa[i + 1:]:
                    if (a, b) not in self.edges and (b, a) not in self.edges:
                        out.add((a, c, b))
        return out


@dataclass
class CpdagGraph:
    """Mixed graph of directed and undirected edges.

    ``directed`` holds ``(a, b)`` meaning ``a -> b``; ``undirected`` holds
    ``(a, b)`` with ``a < b``.
    """

    p: int
    directed: set[Pair] = field(default_factory=set)
    undirected: set[Pair] = field(default_factory=set)

    def __post_init__(self):
        self.directed = {(int(a), int(b)) for a, b in self.directed}
        self.undirected = {_pair(int(a), int(b)) for a, b in self.undirected}
        for a, b in self.directed:
            if a == b:
                raise ValueError(f"self-loop on node {a}")
            if (b, a) in self.directed:
                raise ValueError(f"2-cycle between {a} and {b}")
            if _pair(a, b) in self.undirected:
                raise ValueError(f"pair ({a}, {b}) is both directed and undirected")
        for a, b in self.undirected:
            if a == b:
                raise ValueError(f"self-loop on node {a}")

    @classmethod
    def from_skeleton(cls, g: Graph) -> "CpdagGraph":
        return cls(g.p, set(), set(adjacent_pairs(g)))

    @classmethod
    def from_dag(cls, dag: DAG) -> "CpdagGraph":
        return cls(dag.p, set(dag.edges), set())

    def copy(self) -> "CpdagGraph":
        return CpdagGraph(self.p, set(self.directed), set(self.undirected))

    def adjacent(self, a: int, b: int) -> bool:
        return _pair(a, b) in self.undirected or (a, b) in self.directed or (b, a) in self.directed

    def is_undirected(self, a: int, b: int) -> bool:
        return _pair(a, b) in self.undirected

    def is_directed(self, a: int, b: int) -> bool:
        return (a, b) in self.directed

    def parents(self, x: int) -> list[int]:
        return sorted(a for a, b in self.directed if b == x)

    def children(self, x: int) -> list[int]:
        return sorted(b for a, b in self.directed if a == x)

    def undirected_neighbors(self, x: int) -> list[int]:
        return sorted([b for a, b in self.undirected if a == x] + [a for a, b in self.undirected if b == x])

    def orient(self, a: int, b: int) -> None:
        """Turn the undirected edge ``a - b`` into ``a -> b``."""
        self.undirected.remove(_pair(a, b))
        self.directed.add((a, b))

    def skeleton(self) -> Graph:
        return Graph.from_edges(self.p, list(self.undirected) + list(self.directed))

    def reaches(self, src: int, dst: int) -> bool:
        """True if a directed path ``src -> ... -> dst`` exists."""
        ch: dict[int, list[int]] = {}
        for a, b in self.directed:
            ch.setdefault(a, []).append(b)
        seen, stack = {src}, [src]
        while stack:
            v = stack.pop()
            if v == dst:
                return True
            for c in ch.get(v, ()):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return False

    def directed_is_acyclic(self) -> bool:
        try:
            DAG(self.p, frozenset(self.directed))
        except ValueError:
            return False
        return True

    def is_fully_directed(self) -> bool:
        return not self.undirected

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CpdagGraph)
            and self.p == other.p
            and self.directed == other.directed
            and self.undirected == other.undirected
        )


# Export formats


def _check_names(names: Sequence[str], p: int) -> None:
    if len(names) != p:
        raise ValueError(f"{len(names)} names for {p} nodes")


def skeleton_tsv(g: Graph, names: Sequence[str]) -> str:
    """One ``nameX<TAB>nameY`` line per edge, ``nameX < nameY``, lines sorted."""
    _check_names(names, g.p)
    rows = sorted(tuple(sorted((names[x], names[y]))) for x, y in adjacent_pairs(g))
    return "".join(f"{a}\t{b}\n" for a, b in rows)


def sepsets_tsv(seps: SepsetStore, names: Sequence[str]) -> str:
    rows = []
    for (x, y), z in seps.items():
        a, b = sorted((names[x], names[y]))
        rows.append((a, b, ",".join(names[i] for i in z)))
    rows.sort()
    return "".join(f"{a}\t{b}\t{z}\n" for a, b, z in rows)


_DOT_ID = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*|-?(\.[0-9]+|[0-9]+(\.[0-9]*)?))$")


def _dot_id(name: str) -> str:
    if _DOT_ID.match(name):
        return name
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def cpdag_dot(g: CpdagGraph, names: Sequence[str]) -> str:
    """DOT digraph; undirected edges are written with ``dir=none``."""
    _check_names(names, g.p)
    lines = ["digraph cpdag {"]
    lines += [f"  {_dot_id(s)};" for s in names]
    for a, b in sorted(g.directed):
        lines.append(f"  {_dot_id(names[a])} -> {_dot_id(names[b])};")
    for a, b in sorted(g.undirected):
        lines.append(f"  {_dot_id(names[a])} -> {_dot_id(names[b])} [dir=none];")
    lines.append("}")
    return "\n".join(lines) + "\n"
