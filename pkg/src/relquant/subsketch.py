"""Per-scale sub-sketch: a hierarchy with a weight cap and max-removal overflow."""
from __future__ import annotations

import random
from typing import Callable, Optional, Sequence

from .compactor import Key
from .hierarchy import Hierarchy
from .params import ConfigError, eps_exponent


class SubSketch:
    """Scale-i sketch for ranks around R_i = 2^i / eps.

    Its total weight is capped at 3 R_i; on overflow the largest keys are
    removed (with their weights) until the weight drops to 2 R_i, and the
    caller hands them to the next scale.
    """

    def __init__(self, index: int, eps, space: int, rng: Optional[random.Random] = None, *,
                 mode: str = "const", delta: Optional[float] = None, instrument: bool = False):
        if index < 0:
            raise ConfigError("scale index must be non-negative")
        self.index = index
        self.m = eps_exponent(eps)
        self.R = 1 << (index + self.m)
        self.rng = rng if rng is not None else random.Random()
        self.h = Hierarchy(eps, self.R, space, self.rng, mode=mode, delta=delta, sub=True,
                           instrument=instrument)
        self.min_key: Optional[Key] = None
        self.reset_minima: list = []
        self.reached_R = False
        self.instrument = instrument
        # (key, weight) of everything fed to this scale and everything drained from it
        self.input_log: list = []
        self.removed_log: list = []

    @property
    def space(self) -> int:
        return self.h.space

    @property
    def total_weight(self) -> int:
        h = self.h
        return h.accepted + h.parity_drift - h.discarded - h.removed

    def stored_count(self) -> int:
        return self.h.stored_count()

    def is_empty(self) -> bool:
        return self.min_key is None

    def _after_insert(self, keys: Sequence[Key]) -> None:
        if keys:
            low = keys[0] if len(keys) == 1 else min(keys)
            if self.min_key is None or low < self.min_key:
                self.min_key = low
        if self.total_weight > self.R:
            self.reached_R = True

    # -- insertion --------------------------------------------------------------

    def flush(self, keys: Sequence[Key]) -> bool:
        """Sample a staged batch into the entry level; True if anything was stored."""
        if self.instrument:
            self.input_log.extend((x, 1) for x in keys)
        kept = self.h.insert_sampled(keys)
        self._after_insert(kept)
        return bool(kept)

    def insert_sub(self, x: Key) -> list:
        if self.instrument:
            self.input_log.append((x, 1))
        if self.h.insert(x):
            self._after_insert([x])
        return self.drain() if self.overflowing() else []

    def overflowing(self) -> bool:
        return self.total_weight > 3 * self.R

    def drain(self) -> list:
        """Remove largest keys until the weight is at most 2 R_i; returns them ascending."""
        batch = []
        limit = 2 * self.R
        while self.total_weight > limit:
            batch.append(self.h.remove_max())
        batch.reverse()
        if self.instrument:
            self.removed_log.extend((key, 1 << exp) for key, exp in batch)
        self.min_key = self.h.min_key()
        return batch

    def split_batch(self, batch: Sequence[tuple]) -> list:
        """Group (key, exp) pairs by receiving level.

        A key whose weight is half the entry weight is kept with probability 1/2
        and promoted to the entry level.
        """
        h = self.h
        accepted = set(h.exponents())
        half = h.base_exp - 1
        groups: dict = {}
        if self.instrument:
            self.input_log.extend((key, 1 << exp) for key, exp in batch)
        for key, exp in batch:
            if exp == half:
                if self.rng.getrandbits(1):
                    continue
                exp = h.base_exp
            elif exp not in accepted:
                raise ConfigError(f"scale {self.index} has no level of weight 2^{exp}")
            groups.setdefault(exp, []).append(key)
        chunks = []
        for exp in sorted(groups):
            keys = groups[exp]
            limit = h.batch_limit(exp) or len(keys)
            for start in range(0, len(keys), limit):
                chunks.append((exp, keys[start:start + limit]))
        return chunks

    def insert_chunk(self, exp: int, keys: Sequence[Key]) -> None:
        self.h.insert_at(exp, keys)
        self._after_insert(keys)

    def receive_batch(self, batch: Sequence[tuple],
                      on_step: Optional[Callable[[], None]] = None) -> list:
        for exp, keys in self.split_batch(batch):
            self.insert_chunk(exp, keys)
            if on_step is not None:
                on_step()
        return self.drain() if self.overflowing() else []

    def resize(self, space: int) -> None:
        self.h.resize(space)

    def reset(self) -> None:
        self.reset_minima.append(self.min_key)
        self.h.reset()

    # -- queries ----------------------------------------------------------------

    def rank(self, x: Key) -> int:
        return self.h.rank(x)

    def input_rank(self, x: Key) -> int:
        """Weighted rank of x in everything this scale has been fed."""
        return sum(w for key, w in self.input_log if key < x)

    def error(self, x: Key) -> int:
        """Estimate plus drained weight below x, minus the weighted input rank."""
        drained = sum(w for key, w in self.removed_log if key < x)
        return self.rank(x) + drained - self.input_rank(x)

    def important_resets(self, x: Key) -> int:
        """Resets at which some stored key was smaller than x."""
        return sum(1 for m in self.reset_minima if m is not None and m < x)
