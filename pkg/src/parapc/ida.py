"""Local IDA: causal effects from a CPDAG plus data.

For each treatment the possible parent sets are read off its local
neighbourhood in the CPDAG, and the effect on a target is the regression
coefficient of the treatment when the target is regressed on the treatment
and one candidate parent set.
"""

from __future__ import annotations

import multiprocessing as mp
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .data import Dataset
from .graph import CpdagGraph


class SingularDesignWarning(UserWarning):
    pass


@dataclass(frozen=True)
class EffectEstimate:
    treatment: str
    target: str
    effects: tuple[float, ...]

    @property
    def summary(self) -> float:
        """Effect of smallest magnitude, sign kept; ties go to the first set listed."""
        return min(self.effects, key=abs)

    @property
    def n_parent_sets(self) -> int:
        return len(self.effects)


def local_parent_sets(g: CpdagGraph, x: int) -> list[tuple[int, ...]]:
    """Parent sets of ``x`` realised by some DAG in the equivalence class.

    With ``D`` the directed parents and ``U`` the undirected neighbours of
    ``x``, a subset ``S`` of ``U`` is kept iff pointing ``S`` into ``x`` adds
    no v-structure at ``x``: every pair drawn from ``S``, and every pair with
    one end in ``S`` and one in ``D``, must be adjacent.
    """
    if not 0 <= x < g.p:
        raise ValueError(f"node {x} out of range for p={g.p}")
    direct = g.parents(x)
    undirected = g.undirected_neighbors(x)
    out = []
    for k in range(len(undirected) + 1):
        for s in combinations(undirected, k):
            if any(not g.adjacent(a, b) for a, b in combinations(s, 2)):
                continue
            if any(not g.adjacent(a, b) for a in s for b in direct):
                continue
            out.append(tuple(sorted(direct + list(s))))
    return out


def _regression_coef(values: np.ndarray, x: int, y: int, pa: Sequence[int]) -> tuple[float, bool]:
    cols = [x, *pa]
    design = np.column_stack([np.ones(values.shape[0]), values[:, cols]])
    coef, _, rank, _ = np.linalg.lstsq(design, values[:, y], rcond=None)
    return float(coef[1]), rank < design.shape[1]


def adjusted_effect(d: Dataset, x: int, y: int, pa: Iterable[int]) -> float:
    """Coefficient of ``x`` in the least-squares fit of ``y`` on ``x``, ``pa`` and an intercept.

    A rank-deficient design falls back to the minimum-norm solution and
    raises a ``SingularDesignWarning``.
    """
    pa = list(pa)
    if x == y:
        raise ValueError("treatment and target are the same variable")
    if x in pa or y in pa:
        raise ValueError(f"adjustment set {pa} contains the treatment or target")
    coef, singular = _regression_coef(d.values, x, y, pa)
    if singular:
        warnings.warn(f"singular design regressing {d.names[y]} on {d.names[x]} given "
                      f"{[d.names[i] for i in pa]}; minimum-norm solution used", SingularDesignWarning, stacklevel=2)
    return coef


def _effects_for_treatment(d: Dataset, g: CpdagGraph, x: int, targets: Sequence[int]) -> list[EffectEstimate]:
    parent_sets = local_parent_sets(g, x)
    out = []
    for y in targets:
        if y == x:
            continue
        # y among x's parents: intervening on x cannot move y
        effects = tuple(0.0 if y in pa else adjusted_effect(d, x, y, pa) for pa in parent_sets)
        out.append(EffectEstimate(d.names[x], d.names[y], effects))
    return out


_shared: dict = {}


def _init_shared(d: Dataset, g: CpdagGraph, targets: list[int]) -> None:
    _shared.update(d=d, g=g, targets=targets)


def _shared_effects(x: int) -> list[EffectEstimate]:
    return _effects_for_treatment(_shared["d"], _shared["g"], x, _shared["targets"])


def _resolve(d: Dataset, items: Iterable | None) -> list[int]:
    if items is None:
        return list(range(d.p))
    out = []
    for it in items:
        i = it if isinstance(it, (int, np.integer)) else d.index(it)
        if not 0 <= i < d.p:
            raise ValueError(f"variable index {i} out of range")
        if i not in out:
            out.append(int(i))
    return out


def ida_all_effects(
    d: Dataset,
    g: CpdagGraph,
    treatments: Iterable | None = None,
    targets: Iterable | None = None,
    workers: int = 1,
) -> list[EffectEstimate]:
    """Effects of every treatment on every other target, ranked by ``|summary|``.

    ``treatments`` and ``targets`` accept names or column indices and default
    to all variables. Self-pairs are skipped. Ties in the ranking keep the
    treatment-then-target input order.
    """
    if g.p != d.p:
        raise ValueError(f"graph has {g.p} nodes but the dataset has {d.p} variables")
    xs, ys = _resolve(d, treatments), _resolve(d, targets)
    if workers > 1 and len(xs) > 1:
        with ProcessPoolExecutor(workers, mp_context=mp.get_context("fork"),
                                 initializer=_init_shared, initargs=(d, g, ys)) as ex:
            chunks = list(ex.map(_shared_effects, xs))
    else:
        chunks = [_effects_for_treatment(d, g, x, ys) for x in xs]
    estimates = [e for chunk in chunks for e in chunk]
    return sorted(estimates, key=lambda e: -abs(e.summary))


def effects_tsv(estimates: Sequence[EffectEstimate]) -> str:
    lines = ["treatment\ttarget\tsummary_effect\tn_parent_sets\teffects"]
    for e in estimates:
        lines.append(f"{e.treatment}\t{e.target}\t{e.summary!r}\t{e.n_parent_sets}\t"
                     + ",".join(repr(v) for v in e.effects))
    return "\n".join(lines) + "\n"
