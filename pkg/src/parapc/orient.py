"""Orient a learned skeleton into a CPDAG."""

from __future__ import annotations

import warnings
from itertools import combinations

from .graph import CpdagGraph, Graph, SepsetStore


class OrientationWarning(UserWarning):
    pass


def orient_colliders(skel: Graph, seps: SepsetStore) -> CpdagGraph:
    """Orient ``x -> z <- y`` for every unshielded triple with ``z`` outside sepset(x, y).

    A non-adjacent pair with no recorded sepset is treated as separated by
    the empty set. When two triples claim opposite directions on one edge,
    the edge stays undirected. An arrowhead that would close a directed
    cycle is dropped. Both cases emit an ``OrientationWarning``.
    """
    for (x, y), _ in seps.items():
        if skel.has_edge(x, y):
            raise ValueError(f"sepset recorded for ({x}, {y}) but the edge is still present")

    claims: set[tuple[int, int]] = set()
    for z in range(skel.p):
        for x, y in combinations(skel.neighbors(z), 2):
            if skel.has_edge(x, y):
                continue
            sep = seps.get(x, y) or ()
            if z not in sep:
                claims.add((x, z))
                claims.add((y, z))

    g = CpdagGraph.from_skeleton(skel)
    for a, b in sorted(claims):
        if (b, a) in claims:
            if a < b:
                warnings.warn(f"conflicting collider orientations on edge {a} - {b}; left undirected",
                              OrientationWarning, stacklevel=2)
            continue
        if g.reaches(b, a):
            warnings.warn(f"orienting {a} -> {b} would create a cycle; left undirected",
                          OrientationWarning, stacklevel=2)
            continue
        g.orient(a, b)
    return g


def _try_orient(g: CpdagGraph, a: int, b: int) -> bool:
    if g.reaches(b, a):
        return False
    g.orient(a, b)
    return True


def _rule1(g: CpdagGraph) -> bool:
    # a -> b - c, a and c non-adjacent  =>  b -> c
    changed = False
    for u, v in sorted(g.undirected):
        for b, c in ((u, v), (v, u)):
            if not g.is_undirected(b, c):
                break
            if any(not g.adjacent(a, c) for a in g.parents(b)) and _try_orient(g, b, c):
                changed = True
                break
    return changed


def _rule2(g: CpdagGraph) -> bool:
    # a -> b -> c and a - c  =>  a -> c
    changed = False
    for u, v in sorted(g.undirected):
        for a, c in ((u, v), (v, u)):
            if not g.is_undirected(a, c):
                break
            if any(g.is_directed(b, c) for b in g.children(a)) and _try_orient(g, a, c):
                changed = True
                break
    return changed


def _rule3(g: CpdagGraph) -> bool:
    # a - b, a - c1 -> b, a - c2 -> b, c1 and c2 non-adjacent  =>  a -> b
    changed = False
    for u, v in sorted(g.undirected):
        for a, b in ((u, v), (v, u)):
            if not g.is_undirected(a, b):
                break
            cands = [c for c in g.parents(b) if g.is_undirected(a, c)]
            if any(not g.adjacent(c1, c2) for c1, c2 in combinations(cands, 2)) and _try_orient(g, a, b):
                changed = True
                break
    return changed


def _rule4(g: CpdagGraph) -> bool:
    # a - b, a - c, c -> d -> b, d adjacent to a, c and b non-adjacent  =>  a -> b
    changed = False
    for u, v in sorted(g.undirected):
        for a, b in ((u, v), (v, u)):
            if not g.is_undirected(a, b):
                break
            hit = any(
                g.adjacent(a, d) and g.is_undirected(a, c) and not g.adjacent(c, b)
                for d in g.parents(b)
                for c in g.parents(d)
            )
            if hit and _try_orient(g, a, b):
                changed = True
                break
    return changed


RULES = (_rule1, _rule2, _rule3, _rule4)


def meek_closure(g: CpdagGraph) -> CpdagGraph:
    """Apply Meek's rules R1-R4 in that order, sweeping until nothing changes."""
    g = g.copy()
    while True:
        changed = False
        for rule in RULES:
            changed |= rule(g)
        if not changed:
            return g


def orient(skel: Graph, seps: SepsetStore) -> CpdagGraph:
    return meek_closure(orient_colliders(skel, seps))
