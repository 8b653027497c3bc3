"""Elastic compactors and the fixed-size relative compactor they generalize.

Stored keys live in one sorted list; block ``i`` (1-based) is simply the slice
of sorted positions ``(i-1)*k .. i*k - 1``.  The progress measure ``z`` is a
dyadic fraction kept as an integer numerator over ``2**bits`` so that it never
loses precision, however many blocks are in play.
"""
from __future__ import annotations

import random
from bisect import bisect_left
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional, Sequence

Key = Any


class CapacityExhausted(RuntimeError):
    """Raised when the progress measure would reach 1."""


@dataclass(frozen=True)
class CompactionRecord:
    nblocks: int            # blocks in the compacted suffix
    smallest: Optional[Key] # None when the suffix held no keys
    coin: int               # 0 keeps odd positions, 1 keeps even positions


@dataclass
class Ledger:
    """Optional bookkeeping used by the error-accounting checks."""

    compactions: list = field(default_factory=list)
    reset_minima: list = field(default_factory=list)  # smallest stored key at each reset
    inputs: list = field(default_factory=list)
    emitted: list = field(default_factory=list)
    removed: list = field(default_factory=list)
    releases: int = 0
    max_stored: int = 0
    # running sums of 2^(-ceil(s/k)) (exact) and 2^(-s/k) over resizes since reset
    budget_exact: Fraction = Fraction(0)
    budget: float = 0.0


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


class ElasticCompactor:
    """Resizable sorted block array with the binary compaction schedule."""

    def __init__(self, k: int, initial_space: int = 0, rng: Optional[random.Random] = None,
                 instrument: bool = False):
        if k < 1:
            raise ValueError("block size k must be positive")
        if initial_space < 0:
            raise ValueError("space must be non-negative")
        self.k = k
        self.nblocks = _ceil_div(initial_space, k)
        self.items: list = []
        self._z = 0
        self._zbits = 0
        self.emitted_count = 0
        self.rng = rng if rng is not None else random.Random()
        self.ledger = Ledger() if instrument else None

    def __len__(self) -> int:
        return len(self.items)

    @property
    def capacity(self) -> int:
        return self.nblocks * self.k

    @property
    def z(self) -> Fraction:
        return Fraction(self._z, 1 << self._zbits)

    def z_bits(self) -> str:
        """Bits z_1 z_2 ... of the progress measure, up to its last set bit."""
        if self._z == 0:
            return ""
        return format(self._z, "b").zfill(self._zbits).rstrip("0")

    def blocks(self) -> list[list]:
        k = self.k
        return [self.items[i * k:(i + 1) * k] for i in range(self.nblocks)]

    def compact(self, start_block: int) -> list:
        if not 1 <= start_block <= self.nblocks:
            raise ValueError(f"start block {start_block} outside 1..{self.nblocks}")
        cut = (start_block - 1) * self.k
        suffix = self.items[cut:]
        del self.items[cut:]
        coin = self.rng.getrandbits(1)
        out = suffix[coin::2]
        self.emitted_count += len(out)
        if self.ledger is not None:
            self.ledger.compactions.append(CompactionRecord(
                self.nblocks - start_block + 1, suffix[0] if suffix else None, coin))
            self.ledger.emitted.extend(out)
        return out

    def resize(self, space: int) -> list:
        target = _ceil_div(space, self.k)
        if self.ledger is not None:
            self.ledger.budget_exact += Fraction(1, 1 << target)
            self.ledger.budget += 2.0 ** (-space / self.k)
        if len(self.items) <= target * self.k and target >= self.nblocks:
            self.nblocks = target
            return []
        # next multiple of 2^-target strictly above z
        if self._zbits <= target:
            scaled = self._z << (target - self._zbits)
        else:
            scaled = self._z >> (self._zbits - target)
        scaled += 1
        if scaled >> target:
            raise CapacityExhausted(
                f"progress measure reached 1 while shrinking to {target} blocks")
        self._z, self._zbits = scaled, target
        lowest = target - ((scaled & -scaled).bit_length() - 1)
        out = self.compact(lowest + 1)
        if len(self.items) > target * self.k:
            raise RuntimeError("released blocks were not empty")
        if self.ledger is not None and self.nblocks > target:
            self.ledger.releases += self.nblocks - target
        self.nblocks = target
        return out

    def insert_batch(self, xs: Sequence[Key]) -> list:
        space = self.capacity
        if len(xs) > space:
            raise ValueError(f"batch of {len(xs)} keys exceeds capacity {space}")
        self.resize(2 * space)
        self.items.extend(xs)
        self.items.sort()
        if self.ledger is not None:
            self.ledger.inputs.extend(xs)
            self.ledger.max_stored = max(self.ledger.max_stored, len(self.items))
        return self.resize(space)

    def reset(self) -> None:
        self._z = 0
        self._zbits = 0
        if self.ledger is not None:
            self.ledger.reset_minima.append(self.items[0] if self.items else None)
            self.ledger.budget_exact = Fraction(0)
            self.ledger.budget = 0.0

    def remove_max(self) -> Key:
        if not self.items:
            raise IndexError("remove_max on an empty compactor")
        key = self.items.pop()
        if self.ledger is not None:
            self.ledger.removed.append(key)
        return key

    def rank_in_memory(self, x: Key) -> int:
        return bisect_left(self.items, x)

    # -- error accounting ---------------------------------------------------

    def _require_ledger(self) -> Ledger:
        if self.ledger is None:
            raise RuntimeError("instrumentation is disabled for this compactor")
        return self.ledger

    def important_compaction_count(self, x: Key) -> int:
        return important_compaction_count(self._require_ledger().compactions, x)

    def important_reset_count(self, x: Key) -> int:
        """Resets at which some stored key was <= x."""
        minima = self._require_ledger().reset_minima
        return sum(1 for m in minima if m is not None and m <= x)

    def estimate_input_rank(self, x: Key) -> int:
        """rank in memory + 2 * rank in the output stream + rank among removed keys."""
        ledger = self._require_ledger()
        return (self.rank_in_memory(x)
                + 2 * sum(1 for y in ledger.emitted if y < x)
                + sum(1 for y in ledger.removed if y < x))

    def error(self, x: Key) -> int:
        ledger = self._require_ledger()
        return self.estimate_input_rank(x) - sum(1 for y in ledger.inputs if y < x)


def important_compaction_count(log: Sequence[CompactionRecord], x: Key) -> int:
    return sum(1 for rec in log if rec.smallest is not None and rec.smallest <= x)


class RelativeCompactor:
    """Fixed-capacity relative compactor: compacts only when over capacity.

    Each compaction adds 2^-(b-1) to the progress measure, so the last bit is
    never set and at least one block is always compacted.
    """

    def __init__(self, k: int, space: int, rng: Optional[random.Random] = None):
        if k < 1:
            raise ValueError("block size k must be positive")
        self.k = k
        self.nblocks = _ceil_div(space, k)
        if self.nblocks < 2:
            raise ValueError("a relative compactor needs at least two blocks")
        self.items: list = []
        self.count = 0  # compactions so far; z = count * 2^-(b-1)
        self.emitted_count = 0
        self.rng = rng if rng is not None else random.Random()
        self.sizes: list[int] = []

    def __len__(self) -> int:
        return len(self.items)

    @property
    def capacity(self) -> int:
        return self.nblocks * self.k

    def insert_batch(self, xs: Sequence[Key]) -> list:
        self.items.extend(xs)
        self.items.sort()
        out: list = []
        while len(self.items) > self.capacity:
            self.count += 1
            if self.count >> (self.nblocks - 1):
                raise CapacityExhausted("relative compactor ran out of compactions")
            lowest = (self.nblocks - 1) - ((self.count & -self.count).bit_length() - 1)
            cut = lowest * self.k
            suffix = self.items[cut:]
            del self.items[cut:]
            self.sizes.append(self.nblocks - lowest)
            kept = suffix[self.rng.getrandbits(1)::2]
            self.emitted_count += len(kept)
            out.extend(kept)
        out.sort()
        return out

    def remove_max(self) -> Key:
        if not self.items:
            raise IndexError("remove_max on an empty compactor")
        return self.items.pop()

    def rank_in_memory(self, x: Key) -> int:
        return bisect_left(self.items, x)

    def reset(self) -> None:
        self.count = 0
