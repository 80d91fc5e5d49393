import os
import tracemalloc
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import all_dags
from scenarios import FIGURE1, A, B, C, D
from parapc.citest import DSepOracle, FisherZTest, TestResult, scripted_oracle
from parapc.data import correlations
from parapc.graph import DAG, Graph, adjacent_pairs, complete_graph, snapshot
from parapc.skeleton import (
    EdgeVerdict,
    LearnerConfig,
    SkeletonError,
    evaluate_edge,
    learn_skeleton,
    partition_edges,
    resolve_batch_size,
    split_batches,
    verdict_footprint,
)
from parapc.synth import random_dag, random_sem, sample_sem

ALL_MODES = [
    LearnerConfig(mode="original"),
    LearnerConfig(mode="stable"),
    LearnerConfig(mode="parallel", workers=1),
    LearnerConfig(mode="parallel", workers=3),
    LearnerConfig(mode="parallel", workers=2, mem_efficient=True, batch_size=1),
]


def test_config_validation():
    with pytest.raises(ValueError, match="workers must be ≥ 1"):
        LearnerConfig(workers=0)
    with pytest.raises(ValueError):
        LearnerConfig(mode="fast")
    with pytest.raises(ValueError):
        LearnerConfig(alpha=0.0)
    with pytest.raises(ValueError):
        LearnerConfig(batch_size=0)
    with pytest.raises(ValueError):
        LearnerConfig(max_depth=-1)


@pytest.mark.parametrize("cfg", ALL_MODES, ids=lambda c: f"{c.mode}-{c.workers}-{c.mem_efficient}")
def test_total_independence(cfg):
    p = 5
    test = scripted_oracle({((x, y), ()): True for x, y in combinations(range(p), 2)})
    res = learn_skeleton(test, p, cfg)
    assert res.graph.n_edges() == 0
    assert res.sepsets.as_dict() == {pair: () for pair in combinations(range(p), 2)}
    assert [s.level for s in res.stats] == [0]


@pytest.mark.parametrize("cfg", ALL_MODES, ids=lambda c: f"{c.mode}-{c.workers}-{c.mem_efficient}")
def test_no_independence(cfg):
    p = 5
    res = learn_skeleton(scripted_oracle({}), p, cfg)
    assert res.graph == complete_graph(p)
    assert len(res.sepsets) == 0
    assert [s.level for s in res.stats] == list(range(p - 1))
    assert sum(s.edges_removed for s in res.stats) == 0


def test_figure1_original_keeps_a_c():
    res = learn_skeleton(scripted_oracle(FIGURE1), 4, LearnerConfig(mode="original"))
    assert adjacent_pairs(res.graph) == [(A, C), (B, D)]
    assert res.sepsets.as_dict() == {(A, D): (), (B, C): (), (C, D): (), (A, B): (C,)}


@pytest.mark.parametrize("cfg", ALL_MODES[1:], ids=lambda c: f"{c.mode}-{c.workers}-{c.mem_efficient}")
def test_figure1_frozen_modes_remove_a_c(cfg):
    res = learn_skeleton(scripted_oracle(FIGURE1), 4, cfg)
    assert adjacent_pairs(res.graph) == [(B, D)]
    assert res.sepsets.as_dict() == {(A, D): (), (B, C): (), (C, D): (), (A, B): (C,), (A, C): (B,)}


CHAIN_SEPSETS = {(0, 2): (1,), (0, 3): (1,), (1, 3): (2,)}


@pytest.mark.parametrize("mode", ["original", "stable"])
def test_chain_oracle_sequential(mode):
    chain = DAG(4, frozenset({(0, 1), (1, 2), (2, 3)}))
    res = learn_skeleton(DSepOracle(chain), 4, LearnerConfig(mode=mode))
    assert adjacent_pairs(res.graph) == [(0, 1), (1, 2), (2, 3)]
    assert res.sepsets.as_dict() == CHAIN_SEPSETS


@pytest.mark.parametrize("workers", range(1, 9))
def test_chain_oracle_parallel(workers):
    chain = DAG(4, frozenset({(0, 1), (1, 2), (2, 3)}))
    res = learn_skeleton(DSepOracle(chain), 4, LearnerConfig(mode="parallel", workers=workers))
    assert adjacent_pairs(res.graph) == [(0, 1), (1, 2), (2, 3)]
    assert res.sepsets.as_dict() == CHAIN_SEPSETS


@pytest.mark.parametrize("n, t_b, sizes", [(10, 4, [4, 4, 2]), (10, 100, [10]), (0, 3, [])])
def test_split_batches(n, t_b, sizes):
    pairs = [(i, i + 1) for i in range(n)]
    batches = split_batches(pairs, t_b)
    assert [len(b) for b in batches] == sizes
    assert sum(batches, []) == pairs


@pytest.mark.parametrize("n, workers, sizes", [(7, 3, [3, 2, 2]), (2, 8, [1, 1, 0, 0, 0, 0, 0, 0]), (5, 1, [5])])
def test_partition_edges(n, workers, sizes):
    batch = [(i, i + 1) for i in range(n)]
    parts = partition_edges(batch, workers)
    assert [len(p) for p in parts] == sizes
    assert sum(parts, []) == batch


@given(n=st.integers(0, 200), t_b=st.integers(1, 50), workers=st.integers(1, 16))
def test_batching_properties(n, t_b, workers):
    pairs = [(i, i + 1) for i in range(n)]
    batches = split_batches(pairs, t_b)
    assert sum(batches, []) == pairs
    assert all(len(b) == t_b for b in batches[:-1])
    for b in batches:
        parts = partition_edges(b, workers)
        assert len(parts) == workers
        assert sum(parts, []) == b
        assert max(map(len, parts)) - min(map(len, parts)) <= 1


def test_auto_batch_size_calibration():
    # independent measurement of what one in-flight verdict costs
    tracemalloc.start()
    before = tracemalloc.get_traced_memory()[0]
    held = [EdgeVerdict((i, i + 1), False, tuple(range(i, i + 4)), 4, 4) for i in range(50_000, 55_000)]
    measured = (tracemalloc.get_traced_memory()[0] - before) / len(held)
    tracemalloc.stop()
    fp = verdict_footprint()
    assert 0.5 * measured <= fp <= 2 * measured
    budget = 64 * 2**20
    cfg = LearnerConfig(mem_efficient=True, batch_size="auto", memory_budget=budget)
    assert resolve_batch_size(cfg, 10) == budget // fp
    assert resolve_batch_size(LearnerConfig(mem_efficient=True, batch_size="auto", memory_budget=1), 10) == 1
    assert resolve_batch_size(LearnerConfig(mem_efficient=False, batch_size=3), 10) == 10
    assert resolve_batch_size(LearnerConfig(mem_efficient=True, batch_size=3), 10) == 3


class CountingTest:
    def __init__(self, inner):
        self.inner = inner
        self.calls = []

    def __call__(self, x, y, z=()):
        self.calls.append((x, y, z))
        return self.inner(x, y, z)


def test_edge_grouping_skips_y_side_after_x_removal():
    # edge (0, 1): independent given {2}, which lies on 0's side
    test = CountingTest(scripted_oracle({((0, 1), (2,)): True}))
    snap = snapshot(Graph.from_edges(5, [(0, 1), (0, 2), (1, 3), (1, 4)]))
    v = evaluate_edge(test, snap, 0, 1, 1)
    assert (v.keep, v.sepset, v.tests_x, v.tests_y) == (False, (2,), 1, 0)
    assert test.calls == [(0, 1, (2,))]
    # independent only on 1's side: all of 0's side first, then 1's in order
    test = CountingTest(scripted_oracle({((0, 1), (4,)): True}))
    v = evaluate_edge(test, snap, 0, 1, 1)
    assert (v.keep, v.sepset, v.tests_x, v.tests_y) == (False, (4,), 1, 2)
    assert test.calls == [(0, 1, (2,)), (0, 1, (3,)), (0, 1, (4,))]


def test_errors_carry_level_and_edge_context():
    def broken(x, y, z=()):
        if len(z) == 1:
            raise RuntimeError("boom")
        return TestResult(False)

    for cfg in (LearnerConfig(mode="stable"), LearnerConfig(mode="parallel", workers=1),
                LearnerConfig(mode="parallel", workers=2)):
        with pytest.raises(SkeletonError, match=r"level 1 on edge \(0, 1\).*boom"):
            learn_skeleton(broken, 3, cfg)


def test_worker_death_aborts_level():
    def fatal(x, y, z=()):
        if z:
            os._exit(3)
        return TestResult(False)

    with pytest.raises(SkeletonError, match="worker process died at level 1"):
        learn_skeleton(fatal, 4, LearnerConfig(mode="parallel", workers=2))


def test_max_depth_truncates():
    res = learn_skeleton(scripted_oracle({}), 6, LearnerConfig(mode="parallel", max_depth=1))
    assert res.depth_truncated
    assert [s.level for s in res.stats] == [0, 1]
    assert not learn_skeleton(scripted_oracle({}), 3, LearnerConfig(max_depth=5)).depth_truncated


def _fisher(seed, p=8, n=200, degree=2.0, alpha=0.05):
    d = sample_sem(random_sem(random_dag(p, degree, seed), seed), n, seed)
    return FisherZTest(correlations(d), alpha), d


def _check_graph_invariants(res, p):
    edges_before = p * (p - 1) // 2
    removed = sum(s.edges_removed for s in res.stats)
    assert removed == edges_before - res.graph.n_edges()
    starts = [s.edges_at_start for s in res.stats]
    assert starts == sorted(starts, reverse=True)
    all_pairs = set(combinations(range(p), 2))
    assert set(res.sepsets.as_dict()) == all_pairs - set(adjacent_pairs(res.graph))
    for (x, y), z in res.sepsets.items():
        assert x not in z and y not in z


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    workers=st.integers(1, 4),
    mem_efficient=st.booleans(),
    batch_size=st.sampled_from([1, 3, 7, "auto"]),
)
def test_parallel_equals_stable(seed, workers, mem_efficient, batch_size):
    test, d = _fisher(seed)
    stable = learn_skeleton(test, d.p, LearnerConfig(mode="stable"))
    par = learn_skeleton(test, d.p, LearnerConfig(mode="parallel", workers=workers,
                                                  mem_efficient=mem_efficient, batch_size=batch_size))
    assert par.graph == stable.graph
    assert par.sepsets == stable.sepsets
    assert par.ci_tests == stable.ci_tests
    _check_graph_invariants(par, d.p)
    _check_graph_invariants(stable, d.p)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), data=st.data())
def test_order_independence_small(seed, data):
    test, d = _fisher(seed)
    perm = data.draw(st.permutations(range(d.p)))
    base = learn_skeleton(test, d.p, LearnerConfig(mode="stable"))
    permuted = d.permute(perm)
    res = learn_skeleton(FisherZTest(correlations(permuted), 0.05), d.p, LearnerConfig(mode="parallel"))
    relabelled = {tuple(sorted((perm[a], perm[b]))) for a, b in adjacent_pairs(res.graph)}
    assert relabelled == set(adjacent_pairs(base.graph))


def test_original_mode_is_order_dependent_on_figure1():
    # relabel so that C comes before B: original now removes A-C and keeps A-B
    relabel = {A: 0, C: 1, B: 2, D: 3}
    table = {((relabel[x], relabel[y]), tuple(relabel[v] for v in z)): True for (x, y), z in FIGURE1}
    res = learn_skeleton(scripted_oracle(table), 4, LearnerConfig(mode="original"))
    back = {v: k for k, v in relabel.items()}
    edges = {tuple(sorted((back[x], back[y]))) for x, y in adjacent_pairs(res.graph)}
    assert edges == {(A, B), (B, D)}
    for mode in ("stable", "parallel"):
        res = learn_skeleton(scripted_oracle(table), 4, LearnerConfig(mode=mode))
        edges = {tuple(sorted((back[x], back[y]))) for x, y in adjacent_pairs(res.graph)}
        assert edges == {(B, D)}


def test_deterministic_repeat():
    test, d = _fisher(11, p=12)
    cfg = LearnerConfig(mode="parallel", workers=3, mem_efficient=True, batch_size=5)
    r1, r2 = learn_skeleton(test, d.p, cfg), learn_skeleton(test, d.p, cfg)
    assert r1.graph == r2.graph and r1.sepsets == r2.sepsets
    strip = lambda res: [(s.level, s.edges_at_start, s.edges_tested, s.ci_tests, s.edges_removed, s.batches)
                         for s in res.stats]
    assert strip(r1) == strip(r2)


def test_test_counts_identical_across_workers():
    test, d = _fisher(5, p=15)
    counts = {w: [s.ci_tests for s in learn_skeleton(test, d.p, LearnerConfig(workers=w)).stats]
              for w in (1, 2, 4, 8)}
    assert len({tuple(c) for c in counts.values()}) == 1


def test_inflight_bounded_by_batch():
    test, d = _fisher(5, p=15)
    res = learn_skeleton(test, d.p, LearnerConfig(workers=3, mem_efficient=True, batch_size=4))
    assert res.max_inflight == 4
    res = learn_skeleton(test, d.p, LearnerConfig(workers=3))
    assert res.max_inflight == 15 * 14 // 2


@pytest.mark.parametrize("p", [2, 3, 4])
def test_exact_oracle_recovers_skeleton_exhaustive(p):
    for dag in all_dags(p):
        res = learn_skeleton(DSepOracle(dag), p, LearnerConfig(mode="parallel"))
        assert res.graph == dag.skeleton()


@pytest.mark.parametrize("seed", range(12))
def test_exact_oracle_recovers_skeleton_random(seed):
    p = 8 + seed % 5
    dag = random_dag(p, 2.5, seed)
    oracle = DSepOracle(dag)
    res = learn_skeleton(oracle, p, LearnerConfig(mode="parallel", workers=1 + seed % 4))
    assert res.graph == dag.skeleton()
    orig = learn_skeleton(oracle, p, LearnerConfig(mode="original"))
    assert orig.graph == dag.skeleton()


def test_stats_tsv():
    res = learn_skeleton(scripted_oracle(FIGURE1), 4, LearnerConfig(mode="stable"))
    lines = res.stats_tsv().splitlines()
    assert lines[0] == "level\tedges_at_start\tci_tests\tedges_removed\tmillis"
    assert [ln.split("\t")[:4] for ln in lines[1:]] == [["0", "6", "6", "3"], ["1", "3", "3", "2"]]
