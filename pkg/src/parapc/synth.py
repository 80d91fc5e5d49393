"""Random DAGs and linear-Gaussian SEM samples for ground-truth tests and benchmarks."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset
from .graph import DAG


def default_names(p: int) -> tuple[str, ...]:
    return tuple(f"V{i + 1}" for i in range(p))


@dataclass(frozen=True)
class SemModel:
    """Linear SEM: each node is a weighted sum of its parents plus Gaussian noise."""

    dag: DAG
    weights: dict[tuple[int, int], float]
    noise_sd: tuple[float, ...]
    names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if set(self.weights) != set(self.dag.edges):
            raise ValueError("weights must be defined exactly on the DAG's edges")
        if len(self.noise_sd) != self.dag.p or any(not s > 0 for s in self.noise_sd):
            raise ValueError("need one positive noise sd per node")
        if not self.names:
            object.__setattr__(self, "names", default_names(self.dag.p))
        if len(self.names) != self.dag.p:
            raise ValueError("need one name per node")

    @property
    def p(self) -> int:
        return self.dag.p

    def weight_matrix(self) -> np.ndarray:
        """``B[i, j]`` is the coefficient of ``i`` in the equation for ``j``."""
        b = np.zeros((self.p, self.p))
        for (i, j), w in self.weights.items():
            b[i, j] = w
        return b


def random_dag(p: int, expected_degree: float, seed: int) -> DAG:
    """Erdos-Renyi DAG over the fixed order ``0..p-1``.

    Each forward edge ``i -> j`` (``i < j``) is drawn independently with
    probability ``expected_degree / (p - 1)``.
    """
    if p < 2:
        raise ValueError("p must be ≥ 2")
    if not 0 <= expected_degree <= p - 1:
        raise ValueError(f"expected degree must lie in [0, {p - 1}], got {expected_degree}")
    prob = expected_degree / (p - 1)
    rng = np.random.default_rng(seed)
    mask = np.triu(rng.random((p, p)) < prob, k=1)
    return DAG.from_matrix(mask)


def random_sem(
    dag: DAG,
    seed: int,
    weight_range: tuple[float, float] = (0.5, 2.0),
    noise_sd: float = 1.0,
    names=None,
) -> SemModel:
    """Attach weights uniform in ``weight_range`` in magnitude with a random sign."""
    lo, hi = weight_range
    if not 0 <= lo <= hi:
        raise ValueError("weight range must satisfy 0 <= lo <= hi")
    rng = np.random.default_rng(seed)
    edges = sorted(dag.edges)
    mags = rng.uniform(lo, hi, size=len(edges))
    signs = rng.choice([-1.0, 1.0], size=len(edges))
    weights = {e: float(m * s) for e, m, s in zip(edges, mags, signs)}
    return SemModel(dag, weights, (float(noise_sd),) * dag.p, tuple(names) if names else ())


def sample_sem(m: SemModel, n: int, seed: int) -> Dataset:
    if n < 1:
        raise ValueError("n must be ≥ 1")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, m.p)) * np.asarray(m.noise_sd)
    b = m.weight_matrix()
    for j in m.dag.topological_order:
        pa = list(m.dag.parents[j])
        if pa:
            x[:, j] += x[:, pa] @ b[pa, j]
    return Dataset(m.names, x)


def write_sem(m: SemModel, path) -> None:
    """TSV: one ``name<TAB>noise_sd`` line per node, then ``src<TAB>dst<TAB>weight`` per edge."""
    lines = [f"{name}\t{sd!r}" for name, sd in zip(m.names, m.noise_sd)]
    lines += [f"{m.names[i]}\t{m.names[j]}\t{w!r}" for (i, j), w in sorted(m.weights.items())]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_sem(path) -> SemModel:
    names, sds, edges = [], [], {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) == 2:
            if edges:
                raise ValueError(f"line {lineno}: node lines must precede edge lines")
            names.append(fields[0])
            sds.append(float(fields[1]))
        elif len(fields) == 3:
            index = {s: i for i, s in enumerate(names)}
            try:
                edges[(index[fields[0]], index[fields[1]])] = float(fields[2])
            except KeyError as exc:
                raise ValueError(f"line {lineno}: unknown node {exc.args[0]!r}") from None
        else:
            raise ValueError(f"line {lineno}: expected 2 or 3 tab-separated fields")
    dag = DAG(len(names), frozenset(edges))
    return SemModel(dag, edges, tuple(sds), tuple(names))
