"""Command-line entry point: ``parapc {skeleton,cpdag,ida,bench,simulate}``.

Exit codes: 0 success, 1 bad arguments or input, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import statistics
import sys
import threading
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .citest import FisherZTest
from .data import DataError, Dataset, correlations, load_dataset, write_dataset
from .graph import cpdag_dot, sepsets_tsv, skeleton_tsv
from .ida import effects_tsv, ida_all_effects
from .orient import orient
from .skeleton import DEFAULT_MEMORY_BUDGET, MODES, LearnerConfig, SkeletonResult, default_workers, learn_skeleton
from .synth import random_dag, random_sem, sample_sem, write_sem

log = logging.getLogger("parapc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunManifest:
    command: str
    input: str | None
    cfg: dict
    seed: int | None = None
    outputs: list[str] = field(default_factory=list)
    version: str = __version__
    started: str = ""
    finished: str = ""

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        path.write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def _batch_size(text: str):
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"batch size must be an integer or 'auto', got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _learner_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=0.05, help="significance level (default 0.05)")
    p.add_argument("--mode", choices=MODES, default="parallel")
    p.add_argument("--workers", type=int, default=None,
                   help="worker processes (default: $PARAPC_WORKERS or logical cores)")
    p.add_argument("--mem-efficient", action="store_true", help="process each level in bounded batches")
    p.add_argument("--batch-size", type=_batch_size, default="auto", help="edges per batch, or 'auto'")
    p.add_argument("--memory-budget-mib", type=float, default=DEFAULT_MEMORY_BUDGET / 2**20,
                   help="budget used to size batches when --batch-size is auto")
    p.add_argument("--max-depth", type=int, default=None, help="largest conditioning-set size to try")


def _data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("data", help="delimited text file, rows = samples, columns = variables")
    p.add_argument("--delimiter", default=",", help="field separator (default ','; use '\\t' for tab)")
    p.add_argument("--no-header", action="store_true", help="first line is data; columns become V1..Vp")
    p.add_argument("--out", default="parapc-out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="parapc", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"parapc {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sk = sub.add_parser("skeleton", help="learn the skeleton and separating sets")
    _data_args(sk)
    _learner_args(sk)

    cp = sub.add_parser("cpdag", help="learn the skeleton and orient it into a CPDAG")
    _data_args(cp)
    _learner_args(cp)

    ida = sub.add_parser("ida", help="rank causal effects of treatments on targets")
    _data_args(ida)
    _learner_args(ida)
    ida.add_argument("--treatments", help="file with one treatment name per line (default: all)")
    ida.add_argument("--targets", help="file with one target name per line (default: all)")
    ida.add_argument("--standardize", action="store_true", help="z-score columns before estimating effects")

    bench = sub.add_parser("bench", help="time parallel mode across worker counts on synthetic data")
    bench.add_argument("--p", type=int, default=100)
    bench.add_argument("--degree", type=float, default=2.0)
    bench.add_argument("--n", type=int, default=500)
    bench.add_argument("--seeds", type=int, default=3, help="number of datasets (seeds 0..K-1)")
    bench.add_argument("--workers-list", type=_int_list, default=[1, 2, 4, 8])
    bench.add_argument("--alpha", type=float, default=0.05)
    bench.add_argument("--mem-efficient", action="store_true")
    bench.add_argument("--batch-size", type=_batch_size, default="auto")
    bench.add_argument("--max-depth", type=int, default=None)
    bench.add_argument("--out", default="parapc-out", help="output directory")

    sim = sub.add_parser("simulate", help="sample a random linear-Gaussian SEM")
    sim.add_argument("--p", type=int, required=True)
    sim.add_argument("--degree", type=float, default=2.0)
    sim.add_argument("--n", type=int, required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="CSV path for the samples")
    sim.add_argument("--sem-out", help="optional TSV path for the generating model")
    return parser


def _config(args) -> LearnerConfig:
    workers = args.workers if args.workers is not None else default_workers()
    return LearnerConfig(
        mode=args.mode,
        alpha=args.alpha,
        workers=workers,
        mem_efficient=args.mem_efficient,
        batch_size=args.batch_size,
        max_depth=args.max_depth,
        memory_budget=max(1, int(args.memory_budget_mib * 2**20)),
    )


def _load(args) -> Dataset:
    delim = "\t" if args.delimiter in ("\\t", "tab") else args.delimiter
    if len(delim) != 1:
        raise UsageError(f"delimiter must be a single character, got {args.delimiter!r}")
    return load_dataset(args.data, delimiter=delim, has_header=not args.no_header)


def _write(out_dir: Path, name: str, text: str, manifest: RunManifest) -> None:
    path = out_dir / name
    path.write_text(text, encoding="utf-8")
    manifest.outputs.append(str(path))


def _learn(args, manifest: RunManifest, d: Dataset | None = None) -> tuple[Dataset, SkeletonResult, Path]:
    cfg = _config(args)
    manifest.cfg = asdict(cfg)
    d = d if d is not None else _load(args)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    res = learn_skeleton(FisherZTest(correlations(d), cfg.alpha), d.p, cfg)
    if res.depth_truncated:
        log.warning("stopped at max depth %d; result is depth-truncated", cfg.max_depth)
    _write(out_dir, "skeleton.tsv", skeleton_tsv(res.graph, d.names), manifest)
    _write(out_dir, "sepsets.tsv", sepsets_tsv(res.sepsets, d.names), manifest)
    _write(out_dir, "stats.tsv", res.stats_tsv(), manifest)
    return d, res, out_dir


def cmd_skeleton(args) -> int:
    manifest = RunManifest("skeleton", args.data, {}, started=_now())
    _, _, out_dir = _learn(args, manifest)
    return _finish(manifest, out_dir)


def cmd_cpdag(args) -> int:
    manifest = RunManifest("cpdag", args.data, {}, started=_now())
    d, res, out_dir = _learn(args, manifest)
    _write(out_dir, "cpdag.dot", cpdag_dot(orient(res.graph, res.sepsets), d.names), manifest)
    return _finish(manifest, out_dir)


def _read_names(path: str | None, d: Dataset) -> list[str] | None:
    if path is None:
        return None
    try:
        names = [s.strip() for s in Path(path).read_text(encoding="utf-8").splitlines() if s.strip()]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    for s in names:
        d.index(s)
    return names


def cmd_ida(args) -> int:
    manifest = RunManifest("ida", args.data, {}, started=_now())
    d = _load(args)
    treatments = _read_names(args.treatments, d)
    targets = _read_names(args.targets, d)
    d, res, out_dir = _learn(args, manifest, d)
    g = orient(res.graph, res.sepsets)
    _write(out_dir, "cpdag.dot", cpdag_dot(g, d.names), manifest)
    effect_data = d.standardized() if args.standardize else d
    cfg = _config(args)
    workers = cfg.workers if cfg.mode == "parallel" else 1
    estimates = ida_all_effects(effect_data, g, treatments, targets, workers=workers)
    _write(out_dir, "effects.tsv", effects_tsv(estimates), manifest)
    return _finish(manifest, out_dir)


class PeakRss:
    """Samples resident memory of this process and its children in a background thread."""

    def __init__(self, interval: float = 0.005):
        import psutil

        self._proc = psutil.Process()
        self._psutil = psutil
        self.interval = interval
        self.peak = 0
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._loop, daemon=True)

    def _sample(self) -> None:
        rss = self._proc.memory_info().rss
        for child in self._proc.children(recursive=True):
            try:
                rss += child.memory_info().rss
            except self._psutil.Error:
                pass
        self.peak = max(self.peak, rss)

    def _loop(self) -> None:
        while not self._stop.is_set():
            self._sample()
            self._stop.wait(self.interval)

    def __enter__(self):
        self._sample()
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._stop.set()
        self._thread.join()
        self._sample()


BENCH_COLUMNS = ["workers", "mem_efficient", "batch_size", "seeds", "mean_seconds", "ci_tests", "edges",
                 "speedup", "peak_rss_mib"]


def run_bench(p: int, degree: float, n: int, seeds: int, workers_list: list[int], alpha: float = 0.05,
              mem_efficient: bool = False, batch_size="auto", max_depth=None) -> list[dict]:
    datasets = []
    for seed in range(seeds):
        model = random_sem(random_dag(p, degree, seed), seed)
        datasets.append(correlations(sample_sem(model, n, seed)))
    rows = []
    for w in workers_list:
        cfg = LearnerConfig(mode="parallel", alpha=alpha, workers=w, mem_efficient=mem_efficient,
                            batch_size=batch_size, max_depth=max_depth)
        times, tests, edges = [], 0, 0
        with PeakRss() as mem:
            for corr in datasets:
                t0 = time.perf_counter()
                res = learn_skeleton(FisherZTest(corr, alpha), p, cfg)
                times.append(time.perf_counter() - t0)
                tests += res.ci_tests
                edges += res.graph.n_edges()
        rows.append({"workers": w, "mem_efficient": int(mem_efficient), "batch_size": batch_size,
                     "seeds": seeds, "mean_seconds": statistics.fmean(times), "ci_tests": tests,
                     "edges": edges, "peak_rss_mib": mem.peak / 2**20})
    base = next((r["mean_seconds"] for r in rows if r["workers"] == 1), None)
    for r in rows:
        r["speedup"] = base / r["mean_seconds"] if base else float("nan")
    return rows


def cmd_bench(args) -> int:
    if any(w < 1 for w in args.workers_list) or not args.workers_list:
        raise UsageError("workers must be ≥ 1")
    if args.seeds < 1:
        raise UsageError("seeds must be ≥ 1")
    LearnerConfig(alpha=args.alpha, batch_size=args.batch_size, max_depth=args.max_depth)
    manifest = RunManifest("bench", None, {k: v for k, v in vars(args).items() if k != "func"}, started=_now())
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = run_bench(args.p, args.degree, args.n, args.seeds, args.workers_list, args.alpha,
                     args.mem_efficient, args.batch_size, args.max_depth)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{v:.6g}" if isinstance(v, float) else v) for k, v in r.items()})
    _write(out_dir, "bench.csv", buf.getvalue(), manifest)
    sys.stdout.write(buf.getvalue())
    return _finish(manifest, out_dir)


def cmd_simulate(args) -> int:
    model = random_sem(random_dag(args.p, args.degree, args.seed), args.seed)
    write_dataset(sample_sem(model, args.n, args.seed), args.out)
    if args.sem_out:
        write_sem(model, args.sem_out)
    return 0


def _finish(manifest: RunManifest, out_dir: Path) -> int:
    manifest.finished = _now()
    manifest.outputs.append(str(manifest.write(out_dir)))
    missing = [p for p in manifest.outputs if not Path(p).is_file()]
    if missing:
        print(f"parapc: outputs missing after run: {', '.join(missing)}", file=sys.stderr)
        return 2
    return 0


COMMANDS = {"skeleton": cmd_skeleton, "cpdag": cmd_cpdag, "ida": cmd_ida, "bench": cmd_bench,
            "simulate": cmd_simulate}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"parapc: error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, DataError, ValueError) as exc:
        print(f"parapc: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - report, don't dump a traceback
        log.debug("runtime failure", exc_info=True)
        print(f"parapc: runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
