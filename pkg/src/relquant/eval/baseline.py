"""Fixed-size relative-compactor sketch for a stream length known in advance.

Every level is a relative compactor with block size k ~ 1/(eps sqrt(log n))
and enough blocks that it can never run out of compactions on n keys, so the
per-level space is about sqrt(log n)/eps and the total grows like log^1.5.
"""
from __future__ import annotations

import math
import random
from typing import Optional

from ..compactor import RelativeCompactor
from ..params import ConfigError, eps_exponent


class FixedSizeSketch:
    def __init__(self, eps, n: int, seed: int = 0):
        if n < 2:
            raise ConfigError("the fixed-size sketch needs n >= 2")
        inv = 1 << eps_exponent(eps)
        root = math.sqrt(math.log2(n))
        k = max(2, int(inv / root))
        self.k = k - k % 2
        self.nblocks = max(2, math.ceil(math.log2(n / self.k)) + 1)
        self.rng = random.Random(seed)
        self.levels: list[RelativeCompactor] = []
        self.stored = 0
        self.peak_stored = 0

    def _level(self, h: int) -> RelativeCompactor:
        while len(self.levels) <= h:
            self.levels.append(RelativeCompactor(self.k, self.nblocks * self.k, self.rng))
        return self.levels[h]

    def insert(self, x) -> None:
        keys = [x]
        h = 0
        while keys:
            c = self._level(h)
            before = len(c)
            keys = c.insert_batch(keys)
            self.stored += len(c) - before
            h += 1
        if self.stored > self.peak_stored:
            self.peak_stored = self.stored

    def query(self, x) -> int:
        return sum(c.rank_in_memory(x) << h for h, c in enumerate(self.levels))

    def stored_count(self) -> int:
        return sum(len(c) for c in self.levels)

    def memory_snapshot(self) -> list:
        return [x for c in self.levels for x in c.items]
