"""Conditional independence tests.

Every test is a callable ``test(x, y, z) -> TestResult`` with ``z`` a tuple
of node indices. The skeleton learners only look at ``.independent``, so the
Fisher-z test and the oracles below are interchangeable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .data import CorrelationMatrix
from .graph import DAG

RHO_CLAMP = 1.0 - 1e-12
# Inverse entries beyond this mean the submatrix is numerically singular.
_SINGULAR_INVERSE = 1e12


class CITestError(Exception):
    pass


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # keep pytest from collecting this

    independent: bool
    statistic: float | None = None
    pvalue: float | None = None
    singular: bool = False


CITest = Callable[[int, int, tuple], TestResult]


def _check_args(x: int, y: int, z: Sequence[int]) -> None:
    if x == y:
        raise CITestError(f"x and y are the same node ({x})")
    if x in z or y in z:
        raise CITestError(f"conditioning set {tuple(z)} contains x={x} or y={y}")


def partial_correlation(r: np.ndarray, x: int, y: int, z: Sequence[int]) -> tuple[float, bool]:
    """Partial correlation of ``x`` and ``y`` given ``z`` from a correlation matrix.

    The submatrix over ``{x, y} + z`` is inverted in canonical order (smaller
    endpoint first, ``z`` sorted) so the result does not depend on argument
    order. Returns ``(rho, singular)``.
    """
    a, b = (x, y) if x < y else (y, x)
    if not z:
        return float(r[a, b]), False
    idx = [a, b, *sorted(z)]
    sub = r[np.ix_(idx, idx)]
    try:
        prec = np.linalg.inv(sub)
    except np.linalg.LinAlgError:
        return math.nan, True
    if not np.isfinite(prec).all() or np.abs(prec).max() > _SINGULAR_INVERSE:
        return math.nan, True
    denom = prec[0, 0] * prec[1, 1]
    if denom <= 0.0:
        return math.nan, True
    rho = -prec[0, 1] / math.sqrt(denom)
    if abs(rho) > 1.0 + 1e-9:
        return rho, True
    return float(rho), False


def fisher_z_test(c: CorrelationMatrix, x: int, y: int, z: Sequence[int], alpha: float) -> TestResult:
    """Gaussian partial-correlation test with Fisher's z transform.

    ``z = sqrt(n - |Z| - 3) * atanh(rho)`` and the two-sided p-value is
    ``erfc(|z| / sqrt(2))``; the pair is independent iff ``pvalue > alpha``.
    A numerically singular submatrix yields a dependent verdict with
    ``singular=True`` instead of an exception.
    """
    _check_args(x, y, z)
    df = c.n - len(z) - 3
    if df < 1:
        raise CITestError(f"too few samples: n={c.n} with |Z|={len(z)} leaves n-|Z|-3={df}")
    rho, singular = partial_correlation(c.r, x, y, z)
    if singular:
        rho = math.copysign(RHO_CLAMP, rho) if math.isfinite(rho) else RHO_CLAMP
    rho = max(-RHO_CLAMP, min(RHO_CLAMP, rho))
    stat = abs(math.sqrt(df) * 0.5 * math.log((1.0 + rho) / (1.0 - rho)))
    pvalue = math.erfc(stat / math.sqrt(2.0))
    independent = (pvalue > alpha) and not singular
    return TestResult(independent, stat, pvalue, singular)


class FisherZTest:
    """Callable binding a correlation matrix and significance level."""

    def __init__(self, corr: CorrelationMatrix, alpha: float):
        if not 0.0 < alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {alpha}")
        self.corr = corr
        self.alpha = alpha

    def __call__(self, x: int, y: int, z: tuple = ()) -> TestResult:
        return fisher_z_test(self.corr, x, y, z, self.alpha)


def dsep_oracle(dag: DAG, x: int, y: int, z: Iterable[int]) -> TestResult:
    """Exact d-separation by reachability over (node, direction) states.

    A walk arriving at a node from a child ("up") may continue to parents and
    children if the node is not conditioned on. A walk arriving from a parent
    ("down") may continue to children if the node is not conditioned on, and
    bounce back up to parents if the node is an ancestor of the conditioning
    set (a collider opened by conditioning).
    """
    z = frozenset(z)
    _check_args(x, y, tuple(z))
    parents, children = dag.parents, dag.children

    opened = set(z)
    stack = list(z)
    while stack:
        v = stack.pop()
        for u in parents[v]:
            if u not in opened:
                opened.add(u)
                stack.append(u)

    up, down = True, False
    visited = set()
    frontier = [(x, up)]
    while frontier:
        v, d = frontier.pop()
        if (v, d) in visited:
            continue
        visited.add((v, d))
        if v == y:
            return TestResult(False)
        if d is up:
            if v not in z:
                frontier.extend((u, up) for u in parents[v])
                frontier.extend((c, down) for c in children[v])
        else:
            if v not in z:
                frontier.extend((c, down) for c in children[v])
            if v in opened:
                frontier.extend((u, up) for u in parents[v])
    return TestResult(True)


class DSepOracle:
    """Perfect CI information read off a known DAG; memoised per query."""

    def __init__(self, dag: DAG):
        self.dag = dag
        self.calls = 0
        self._memo: dict = {}

    def __call__(self, x: int, y: int, z: tuple = ()) -> TestResult:
        self.calls += 1
        key = (min(x, y), max(x, y), frozenset(z))
        res = self._memo.get(key)
        if res is None:
            res = self._memo[key] = dsep_oracle(self.dag, x, y, z)
        return res


ScriptKey = tuple[frozenset, frozenset]


class ScriptedOracle:
    """Replays tabulated verdicts; any query missing from the table is dependent."""

    def __init__(self, table: Mapping):
        self.table: dict[ScriptKey, bool] = {}
        for (pair, z), verdict in table.items():
            x, y = pair
            self.table[(frozenset((x, y)), frozenset(z))] = bool(verdict)

    def __call__(self, x: int, y: int, z: tuple = ()) -> TestResult:
        return TestResult(self.table.get((frozenset((x, y)), frozenset(z)), False))


def scripted_oracle(table: Mapping) -> ScriptedOracle:
    return ScriptedOracle(table)


def load_scripted_table(path, names: Sequence[str]) -> dict[ScriptKey, bool]:
    """Parse ``X<TAB>Y<TAB>comma-joined Z<TAB>indep|dep`` lines into a table."""
    index = {s: i for i, s in enumerate(names)}

    def node(s: str, lineno: int) -> int:
        try:
            return index[s.strip()]
        except KeyError:
            raise CITestError(f"line {lineno}: unknown variable {s.strip()!r}") from None

    table: dict[ScriptKey, bool] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) != 4:
            raise CITestError(f"line {lineno}: expected 4 tab-separated fields, got {len(fields)}")
        x, y, zs, verdict = fields
        verdict = verdict.strip()
        if verdict not in ("indep", "dep"):
            raise CITestError(f"line {lineno}: verdict must be indep or dep, got {verdict!r}")
        z = frozenset(node(s, lineno) for s in zs.split(",") if s.strip())
        table[(frozenset((node(x, lineno), node(y, lineno))), z)] = verdict == "indep"
    return table
