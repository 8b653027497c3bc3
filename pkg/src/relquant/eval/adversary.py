"""Adaptive stream construction that forces a space/error trade-off.

The construction runs ``trials`` independent copies of a seeded algorithm in
lock-step on the stream it is building.  At each recursion node it inserts an
anchor key, builds the first half recursively above it, then estimates how
often the copies still hold the anchor.  Likely-remembered anchors are
followed by fresh maxima; likely-forgotten ones by a second half placed above
or below the anchor by a fair coin.
"""
from __future__ import annotations

import random
from bisect import bisect_left, insort
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from ..params import ConfigError, format_key
from .oracle import RankOracle

MIN_TRIALS = 30
AMBIGUOUS = (0.4, 0.6)


class KeepSmallest:
    """Baseline that stores the s smallest keys seen and answers from them."""

    def __init__(self, s: int, seed: int = 0):
        self.s = s
        self.items: list = []

    def insert(self, x) -> None:
        insort(self.items, x)
        if len(self.items) > self.s:
            self.items.pop()

    def query(self, x) -> int:
        return bisect_left(self.items, x)

    def memory_snapshot(self) -> list:
        return list(self.items)

    def contains(self, x) -> bool:
        j = bisect_left(self.items, x)
        return j < len(self.items) and self.items[j] == x

    def stored_count(self) -> int:
        return len(self.items)


@dataclass
class AdversaryNode:
    depth: int
    anchor: str
    remember_prob: float
    ambiguous: bool
    case: int            # 1: anchor remembered, 2: anchor forgotten
    placement: str       # "maxima", "above" or "below"


@dataclass
class AdversaryTranscript:
    depth: int
    trials: int
    stream: list
    query: str
    query_rank: int
    nodes: list = field(default_factory=list)
    mean_space: list = field(default_factory=list)
    max_mean_space: float = 0.0
    mean_sq_error: float = 0.0

    @property
    def objective(self) -> float:
        return self.max_mean_space + self.mean_sq_error

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["objective"] = self.objective
        return doc


def _holds(algo, x) -> bool:
    if hasattr(algo, "contains"):
        return algo.contains(x)
    return x in algo.memory_snapshot()


def _size(algo) -> int:
    if hasattr(algo, "stored_count"):
        return algo.stored_count()
    return len(algo.memory_snapshot())


def build_adversary_stream(k: int, algo_factory: Callable[[int], object], trials: int = 200,
                           seed: int = 0) -> AdversaryTranscript:
    """Build a stream of 2^k - 1 rational keys adapted to ``algo_factory``.

    ``algo_factory(trial_seed)`` must return a fresh algorithm exposing insert,
    query and memory_snapshot.  The coin flips of the construction come from
    ``seed``; algorithm copies use seeds 0..trials-1.
    """
    if k < 1:
        raise ConfigError("depth must be at least 1")
    if trials < MIN_TRIALS:
        raise ConfigError(f"need at least {MIN_TRIALS} trials, got {trials}")
    coin = random.Random(seed)
    copies = [algo_factory(t) for t in range(trials)]
    stream: list = []
    mean_space: list = []
    nodes: list = []

    def feed(x) -> None:
        stream.append(x)
        total = 0
        for a in copies:
            a.insert(x)
            total += _size(a)
        mean_space.append(total / trials)

    def build(depth: int, lo: Fraction, hi: Fraction):
        # keys of this subtree live strictly inside (lo, hi)
        width = (hi - lo) / 4
        anchor = lo + width
        feed(anchor)
        if depth == 1:
            return anchor
        first = build(depth - 1, lo + 2 * width, lo + 3 * width)
        p = sum(_holds(a, anchor) for a in copies) / trials
        ambiguous = AMBIGUOUS[0] <= p <= AMBIGUOUS[1]
        if p >= 0.5:
            count = (1 << (depth - 1)) - 1
            start = lo + 3 * width
            step = width / (count + 1)
            for j in range(1, count + 1):
                feed(start + j * step)
            nodes.append(AdversaryNode(depth, format_key(anchor), p, ambiguous, 1, "maxima"))
            return first
        above = bool(coin.getrandbits(1))
        region = (anchor, lo + 2 * width) if above else (lo, anchor)
        nodes.append(AdversaryNode(depth, format_key(anchor), p, ambiguous, 2,
                                   "above" if above else "below"))
        return build(depth - 1, *region)

    query = build(k, Fraction(0), Fraction(1))
    truth = RankOracle(stream).exact_rank(query)
    sq = sum((a.query(query) - truth) ** 2 for a in copies) / trials
    return AdversaryTranscript(
        depth=k, trials=trials, stream=[format_key(x) for x in stream],
        query=format_key(query), query_rank=truth, nodes=nodes,
        mean_space=mean_space, max_mean_space=max(mean_space), mean_sq_error=sq)
