"""Error and space measurement across independent seeded runs."""
from __future__ import annotations

import os
from bisect import bisect_left, insort
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ..sketch import RelativeSketch
from .oracle import RankOracle

THREADS_ENV = "RELQUANT_THREADS"


@dataclass(frozen=True)
class SketchFactory:
    """Picklable sketch factory."""
    eps: str = "1/64"
    mode: str = "const"
    delta: Optional[float] = None

    def __call__(self, seed: int) -> RelativeSketch:
        return RelativeSketch(self.eps, seed, self.mode, self.delta)


class ExactSketch:
    """Stores every key; answers exactly."""

    def __init__(self, seed: int = 0):
        self.items: list = []
        self.peak_stored = 0

    def insert(self, x) -> None:
        insort(self.items, x)
        self.peak_stored = len(self.items)

    def query(self, x) -> int:
        return bisect_left(self.items, x)

    def stored_count(self) -> int:
        return len(self.items)

    def memory_snapshot(self) -> list:
        return list(self.items)


@dataclass
class QueryError:
    query_rank: int
    true_rank: int
    mean_rel_err: float
    rms_rel_err: float
    p90_rel_err: float
    peak_space: int
    frac_over_eps: Optional[float] = None


@dataclass
class ErrorReport:
    queries: list = field(default_factory=list)
    peak_space: int = 0
    mean_space: float = 0.0
    seeds: list = field(default_factory=list)
    estimates: list = field(default_factory=list)  # per seed, per query

    def to_json(self) -> dict:
        return {"queries": [asdict(q) for q in self.queries], "peak_space": self.peak_space,
                "mean_space": self.mean_space, "seeds": list(self.seeds)}


def _current_size(sketch) -> int:
    inner = getattr(sketch, "stored_in_subs", None)
    if inner is not None:
        return inner + sketch.staged
    return sketch.stored_count()


def run_one(factory: Callable[[int], object], stream: Sequence, keys: Sequence, seed: int):
    """Feed the stream to one sketch; returns (estimates, peak space, mean space)."""
    sk = factory(seed)
    space_sum = 0
    for x in stream:
        sk.insert(x)
        space_sum += _current_size(sk)
    mean = space_sum / len(stream) if stream else 0.0
    return [sk.query(x) for x in keys], getattr(sk, "peak_stored", 0), mean


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


def measure_error(factory: Callable[[int], object], stream: Sequence, query_ranks: Sequence[int],
                  seeds: Sequence[int], eps: Optional[float] = None,
                  workers: Optional[int] = None) -> ErrorReport:
    oracle = RankOracle(stream)
    ranks = [r for r in query_ranks if 0 <= r < len(oracle)]
    keys = [oracle.key_at_rank(r) for r in ranks]
    truths = [oracle.exact_rank(x) for x in keys]
    seeds = list(seeds)
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(seeds))) as pool:
            results = list(pool.map(run_one, [factory] * len(seeds), [stream] * len(seeds),
                                    [keys] * len(seeds), seeds))
    else:
        results = [run_one(factory, stream, keys, s) for s in seeds]
    peak = max((r[1] for r in results), default=0)
    mean_space = float(np.mean([r[2] for r in results])) if results else 0.0
    report = ErrorReport(peak_space=peak, mean_space=mean_space, seeds=seeds,
                         estimates=[r[0] for r in results])
    if not results:
        return report
    est = np.array([r[0] for r in results], dtype=float)  # seeds x queries
    for j, (rank, truth) in enumerate(zip(ranks, truths)):
        rel = np.abs(est[:, j] - truth) / max(truth, 1)
        report.queries.append(QueryError(
            query_rank=rank, true_rank=truth,
            mean_rel_err=float(rel.mean()),
            rms_rel_err=float(np.sqrt(np.mean(rel ** 2))),
            p90_rel_err=float(np.percentile(rel, 90)),
            peak_space=peak,
            frac_over_eps=None if eps is None else float(np.mean(rel > eps))))
    return report
