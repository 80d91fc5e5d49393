"""Skeleton learning: original PC, stable PC and level-parallel PC.

All three modes enumerate work in the same canonical order: edges as sorted
``(x, y)`` pairs with ``x < y``, conditioning sets as lexicographic
combinations of the sorted neighbour list, ``x``'s side before ``y``'s. That
makes stable and parallel runs comparable by exact equality.

Parallel mode follows the coordinator/worker shape of the level-synchronous
algorithm: at the start of each level the adjacency is frozen into a shared
read-only buffer, the level's edges are cut into batches of ``batch_size``,
each batch is split contiguously over the worker processes, and the
coordinator alone applies the returned verdicts at the end of every batch.
"""

from __future__ import annotations

import logging
import multiprocessing as mp
import os
import time
import tracemalloc
from concurrent.futures import ProcessPoolExecutor
from concurrent.futures.process import BrokenProcessPool
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Sequence, Union

import numpy as np

from .citest import CITest
from .graph import AdjacencySnapshot, Graph, Pair, SepsetStore, adjacent_pairs, complete_graph, snapshot

log = logging.getLogger(__name__)

MODES = ("original", "stable", "parallel")
DEFAULT_MEMORY_BUDGET = 512 * 2**20


class SkeletonError(RuntimeError):
    pass


@dataclass(frozen=True)
class LearnerConfig:
    mode: str = "parallel"
    alpha: float = 0.05
    workers: int = 1
    mem_efficient: bool = False
    batch_size: Union[int, str] = "auto"
    max_depth: int | None = None
    memory_budget: int = DEFAULT_MEMORY_BUDGET

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {', '.join(MODES)}, got {self.mode!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ValueError("workers must be ≥ 1")
        if self.batch_size != "auto" and (not isinstance(self.batch_size, int) or self.batch_size < 1):
            raise ValueError("batch size must be a positive integer or 'auto'")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValueError("max depth must be ≥ 0")
        if self.memory_budget < 1:
            raise ValueError("memory budget must be positive")


@dataclass(frozen=True)
class EdgeVerdict:
    pair: Pair
    keep: bool
    sepset: tuple[int, ...] | None = None
    tests_x: int = 0
    tests_y: int = 0

    @property
    def tests(self) -> int:
        return self.tests_x + self.tests_y


@dataclass
class LevelStats:
    level: int
    edges_at_start: int
    edges_tested: int = 0
    ci_tests: int = 0
    edges_removed: int = 0
    seconds: float = 0.0
    batches: int = 0
    max_inflight: int = 0


@dataclass
class SkeletonResult:
    graph: Graph
    sepsets: SepsetStore
    stats: list[LevelStats] = field(default_factory=list)
    depth_truncated: bool = False

    @property
    def ci_tests(self) -> int:
        return sum(s.ci_tests for s in self.stats)

    @property
    def max_inflight(self) -> int:
        """High-water mark of verdicts held by the coordinator before a sync."""
        return max((s.max_inflight for s in self.stats), default=0)

    def stats_tsv(self) -> str:
        lines = ["level\tedges_at_start\tci_tests\tedges_removed\tmillis"]
        for s in self.stats:
            lines.append(f"{s.level}\t{s.edges_at_start}\t{s.ci_tests}\t{s.edges_removed}\t{s.seconds * 1e3:.3f}")
        return "\n".join(lines) + "\n"


def split_batches(pairs: Sequence[Pair], batch_size: int) -> list[list[Pair]]:
    if batch_size < 1:
        raise ValueError("batch size must be ≥ 1")
    return [list(pairs[i:i + batch_size]) for i in range(0, len(pairs), batch_size)]


def partition_edges(batch: Sequence[Pair], workers: int) -> list[list[Pair]]:
    """Contiguous split into ``workers`` sublists whose sizes differ by at most one."""
    if workers < 1:
        raise ValueError("workers must be ≥ 1")
    q, r = divmod(len(batch), workers)
    out, start = [], 0
    for k in range(workers):
        size = q + (1 if k < r else 0)
        out.append(list(batch[start:start + size]))
        start += size
    return out


@lru_cache(maxsize=None)
def verdict_footprint(sample: int = 2000, sepset_size: int = 4) -> int:
    """Measured bytes held per in-flight verdict (object, sepset tuple, list slot)."""
    tracemalloc.start()
    try:
        before = tracemalloc.get_traced_memory()[0]
        held = [
            EdgeVerdict((i, i + 1), False, tuple(range(i + 2, i + 2 + sepset_size)), sepset_size, sepset_size)
            for i in range(10_000, 10_000 + sample)
        ]
        after = tracemalloc.get_traced_memory()[0]
    finally:
        tracemalloc.stop()
    del held
    return max(1, -(-(after - before) // sample))


def resolve_batch_size(cfg: LearnerConfig, n_pairs: int) -> int:
    """Edges per batch for one level; the whole level when not memory-efficient."""
    if not cfg.mem_efficient:
        return max(1, n_pairs)
    if cfg.batch_size == "auto":
        return max(1, cfg.memory_budget // verdict_footprint())
    return int(cfg.batch_size)


def evaluate_edge(test: CITest, snap: AdjacencySnapshot, x: int, y: int, d: int) -> EdgeVerdict:
    """Grouped scan of one edge: all size-``d`` subsets of ``x``'s side, then ``y``'s.

    Stops at the first independence, so an edge cut on ``x``'s side costs no
    tests on ``y``'s side. Subsets of ``y``'s side already tried on ``x``'s
    side are not repeated.
    """
    tests_x = tests_y = 0
    side_x = [v for v in snap.adj(x) if v != y]
    if len(side_x) >= d:
        for z in combinations(side_x, d):
            tests_x += 1
            if _run_test(test, x, y, z, d).independent:
                return EdgeVerdict((x, y), False, z, tests_x, 0)
    seen = frozenset(side_x)
    side_y = [v for v in snap.adj(y) if v != x]
    if len(side_y) >= d:
        for z in combinations(side_y, d):
            if seen.issuperset(z):
                continue
            tests_y += 1
            if _run_test(test, x, y, z, d).independent:
                return EdgeVerdict((x, y), False, z, tests_x, tests_y)
    return EdgeVerdict((x, y), True, None, tests_x, tests_y)


def _run_test(test: CITest, x: int, y: int, z: tuple, d: int):
    try:
        return test(x, y, z)
    except Exception as exc:
        raise SkeletonError(f"CI test failed at level {d} on edge ({x}, {y}) given {z}: {exc}") from exc


# Worker-process side. State is installed once per pool by fork inheritance;
# the adjacency buffer is rewritten by the coordinator between levels only.
_worker: dict = {}


def _init_worker(test: CITest, buffer, p: int) -> None:
    _worker.clear()
    _worker.update(test=test, adj=np.frombuffer(buffer, dtype=np.uint8).reshape(p, p), level=None, snap=None)


def _worker_evaluate(level: int, pairs: list[Pair]) -> list[EdgeVerdict]:
    if _worker["level"] != level:
        adj = _worker["adj"]
        _worker["snap"] = AdjacencySnapshot(tuple(tuple(np.flatnonzero(row).tolist()) for row in adj))
        _worker["level"] = level
    test, snap = _worker["test"], _worker["snap"]
    return [evaluate_edge(test, snap, x, y, level) for x, y in pairs]


class _Pool:
    """Fork-based process pool sharing the frozen adjacency through a raw buffer."""

    def __init__(self, test: CITest, p: int, workers: int):
        self.p = p
        self.buffer = mp.RawArray("B", p * p)
        self.adj = np.frombuffer(self.buffer, dtype=np.uint8).reshape(p, p)
        self.executor = ProcessPoolExecutor(
            max_workers=workers,
            mp_context=mp.get_context("fork"),
            initializer=_init_worker,
            initargs=(test, self.buffer, p),
        )

    def freeze(self, g: Graph) -> None:
        self.adj[:] = g.matrix

    def run(self, level: int, parts: list[list[Pair]]) -> list[list[EdgeVerdict]]:
        futures = [self.executor.submit(_worker_evaluate, level, part) if part else None for part in parts]
        try:
            return [f.result() if f is not None else [] for f in futures]
        except BrokenProcessPool as exc:
            raise SkeletonError(f"worker process died at level {level}") from exc

    def close(self) -> None:
        self.executor.shutdown(wait=True, cancel_futures=True)


def learn_skeleton(test: CITest, p: int, cfg: LearnerConfig | None = None) -> SkeletonResult:
    """Learn the undirected skeleton and separating sets from a CI test.

    Starts from the complete graph over ``p`` nodes and raises the
    conditioning-set size ``d`` one level at a time until no adjacent pair
    has ``d`` neighbours to condition on, or ``d`` exceeds ``cfg.max_depth``.
    """
    cfg = cfg or LearnerConfig()
    if p < 2:
        raise ValueError("need at least 2 nodes")
    g = complete_graph(p)
    seps = SepsetStore()
    result = SkeletonResult(g, seps)

    pool = None
    try:
        d = 0
        while True:
            max_deg = max((g.degree(x) for x in range(p)), default=0)
            if max_deg - 1 < d:
                break
            if cfg.max_depth is not None and d > cfg.max_depth:
                result.depth_truncated = True
                break
            stats = LevelStats(level=d, edges_at_start=g.n_edges())
            t0 = time.perf_counter()
            if cfg.mode == "original":
                _level_sequential(test, g, seps, d, stats, frozen=False)
            elif cfg.mode == "stable":
                _level_sequential(test, g, seps, d, stats, frozen=True)
            else:
                if cfg.workers > 1 and pool is None:
                    pool = _Pool(test, p, cfg.workers)
                _level_parallel(test, g, seps, d, stats, cfg, pool)
            stats.seconds = time.perf_counter() - t0
            result.stats.append(stats)
            log.debug("level %d: %d tests, %d removed", d, stats.ci_tests, stats.edges_removed)
            d += 1
    finally:
        if pool is not None:
            pool.close()
    return result


def _level_sequential(test: CITest, g: Graph, seps: SepsetStore, d: int, stats: LevelStats, frozen: bool) -> None:
    """One level over ordered pairs; ``frozen`` reads neighbours from the level snapshot."""
    snap = snapshot(g) if frozen else None
    tested = set()
    for x in range(g.p):
        for y in (snap.adj(x) if frozen else g.neighbors(x)):
            if not g.has_edge(x, y):
                continue
            nbrs = snap.adj(x) if frozen else g.neighbors(x)
            side = [v for v in nbrs if v != y]
            if len(side) < d:
                continue
            a, b = (x, y) if x < y else (y, x)
            # stable: the smaller endpoint's side was scanned first, don't repeat it
            seen = frozenset(v for v in snap.adj(a) if v != b) if frozen and x > y else None
            for z in combinations(side, d):
                if seen is not None and seen.issuperset(z):
                    continue
                stats.ci_tests += 1
                tested.add((a, b))
                if _run_test(test, a, b, z, d).independent:
                    g.remove_edge(x, y)
                    seps.add(x, y, z)
                    stats.edges_removed += 1
                    break
    stats.edges_tested = len(tested)
    stats.batches = 1


def _level_parallel(
    test: CITest, g: Graph, seps: SepsetStore, d: int, stats: LevelStats, cfg: LearnerConfig, pool: _Pool | None
) -> None:
    snap = snapshot(g)
    if pool is not None:
        pool.freeze(g)
    pairs = adjacent_pairs(g)
    batch_size = resolve_batch_size(cfg, len(pairs))
    for batch in split_batches(pairs, batch_size):
        parts = partition_edges(batch, cfg.workers)
        if pool is None:
            results = [[evaluate_edge(test, snap, x, y, d) for x, y in part] for part in parts]
        else:
            results = pool.run(d, parts)
        inflight = 0
        for verdicts in results:
            inflight += len(verdicts)
            stats.max_inflight = max(stats.max_inflight, inflight)
        # synchronisation step: the coordinator alone mutates the graph
        for verdicts in results:
            for v in verdicts:
                stats.ci_tests += v.tests
                stats.edges_tested += v.tests > 0
                if not v.keep:
                    g.remove_edge(*v.pair)
                    seps.add(*v.pair, v.sepset)
                    stats.edges_removed += 1
        stats.batches += 1


def default_workers() -> int:
    env = os.environ.get("PARAPC_WORKERS")
    if env:
        return int(env)
    return os.cpu_count() or 1
