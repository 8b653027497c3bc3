"""Exact strict-rank oracle over a finite multiset of keys."""
from __future__ import annotations

from bisect import bisect_left
from typing import Iterable


class RankOracle:
    def __init__(self, keys: Iterable = ()):
        self.keys = sorted(keys)

    def __len__(self) -> int:
        return len(self.keys)

    def add(self, x) -> None:
        self.keys.insert(bisect_left(self.keys, x), x)

    def exact_rank(self, x) -> int:
        """Number of keys strictly smaller than x."""
        return bisect_left(self.keys, x)

    def key_at_rank(self, r: int):
        """The r-th smallest key (0-based); its exact rank is r when keys are distinct."""
        if not 0 <= r < len(self.keys):
            raise IndexError(f"rank {r} outside 0..{len(self.keys) - 1}")
        return self.keys[r]
