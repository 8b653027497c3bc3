"""Top-R quantiles sketch: a sampler, a chain of compactors and a buffer.

Every stored key carries weight ``2**e`` for an integer exponent ``e``.  Levels
are addressed by that exponent, which lets sub-sketches of neighbouring scales
hand keys to each other without any conversion.
"""
from __future__ import annotations

import math
import random
from bisect import bisect_left, insort
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Optional, Sequence

from .compactor import ElasticCompactor, Key, RelativeCompactor
from .params import ConfigError, eps_exponent, loglog_delta

HIGHPROB_C = 128


@dataclass(frozen=True)
class Layout:
    k: int                     # block size of every compactor
    sample_exp: int            # raw keys enter with weight 2**sample_exp, w.p. 2**-sample_exp
    level_exps: tuple          # weight exponents of the compactors, ascending
    top_exp: int               # weight exponent of the buffer
    buffer_cap: int

    @property
    def sample_prob(self) -> Fraction:
        return Fraction(1, 1 << self.sample_exp)


def _ceil_log2(x: float) -> int:
    return max(0, math.ceil(math.log2(x) - 1e-12))


def make_layout(m: int, r: int, mode: str = "const", delta: Optional[float] = None,
                sub: bool = False) -> Layout:
    """Layout for eps = 2**-m and rank horizon R = 2**r.

    Constant mode uses k = 1/eps, level weights 2^j eps^2 R and buffer weight eps R.
    High-probability mode rounds k and the sampling amplification up to powers of two.
    Weights below 1 are dropped, i.e. the sampler is omitted when R < 1/eps^2.
    """
    if mode == "const":
        k = max(2, 1 << m)
        base = r - 2 * m
        top = r - m
    elif mode == "highprob":
        if delta is None:
            raise ConfigError("high-probability mode needs delta")
        lld = loglog_delta(delta)
        k_exp = _ceil_log2(HIGHPROB_C * lld * lld * (1 << m))
        amp_exp = _ceil_log2(HIGHPROB_C * math.log2(1 / delta))
        k = 1 << k_exp
        base = r - 2 * m - amp_exp
        top = r - k_exp
    else:
        raise ConfigError(f"unknown mode {mode!r}")
    entry = max(base, 0)
    top = max(top, entry)
    cap = (3 if sub else 1) << (r - top)
    return Layout(k, entry, tuple(range(entry, top)), top, cap)


class Hierarchy:
    """Sampler + elastic compactors + buffer, answering ranks up to R."""

    def __init__(self, eps, R: int, space: int, rng: Optional[random.Random] = None, *,
                 mode: str = "const", delta: Optional[float] = None, sub: bool = False,
                 instrument: bool = False, layout: Optional[Layout] = None,
                 compactor: Optional[Callable[[int, int, random.Random], object]] = None):
        self.m = eps_exponent(eps)
        if R < 1:
            raise ConfigError("R must be a positive integer")
        self.r = max(0, (R - 1).bit_length())  # R rounded up to a power of two
        self.layout = layout or make_layout(self.m, self.r, mode, delta, sub)
        self.sub = sub
        self.rng = rng if rng is not None else random.Random()
        self.space = space
        k = self.layout.k
        if compactor is None:
            self.levels = [ElasticCompactor(k, space, self.rng, instrument)
                           for _ in self.layout.level_exps]
        else:
            self.levels = [compactor(k, space, self.rng) for _ in self.layout.level_exps]
        self.buffer: list = []
        # weight bookkeeping, in units of stored-key weight
        self.accepted = 0
        self.discarded = 0
        self.removed = 0
        self.parity_drift = 0

    # -- layout helpers ---------------------------------------------------------

    @property
    def k(self) -> int:
        return self.layout.k

    @property
    def R(self) -> int:
        return 1 << self.r

    @property
    def sample_prob(self) -> Fraction:
        return self.layout.sample_prob

    @property
    def base_exp(self) -> int:
        return self.layout.sample_exp

    @property
    def top_exp(self) -> int:
        return self.layout.top_exp

    def batch_limit(self, exp: int) -> Optional[int]:
        """Largest batch accepted at once by the level of weight 2**exp (None for the buffer)."""
        if exp == self.layout.top_exp:
            return None
        return self.levels[exp - self.layout.sample_exp].capacity

    def exponents(self) -> tuple:
        return self.layout.level_exps + (self.layout.top_exp,)

    # -- insertion --------------------------------------------------------------

    def _sampled(self, keys: Sequence[Key]) -> list:
        e = self.layout.sample_exp
        if e == 0:
            return list(keys)
        bits = self.rng.getrandbits
        return [x for x in keys if not bits(e)]

    def insert(self, x: Key) -> bool:
        return bool(self.insert_sampled([x]))

    def insert_sampled(self, keys: Sequence[Key]) -> list:
        """Pass keys through the sampler; survivors enter the entry level as one batch."""
        kept = self._sampled(keys)
        if kept:
            self.insert_at(self.layout.sample_exp, kept)
        return kept

    def insert_at(self, exp: int, keys: Sequence[Key]) -> None:
        """Insert keys that already carry weight 2**exp and cascade the outputs upward."""
        self.accepted += len(keys) << exp
        if exp == self.layout.top_exp:
            self._to_buffer(list(keys))
            return
        idx = exp - self.layout.sample_exp
        if not 0 <= idx < len(self.levels):
            raise ConfigError(f"no level carries weight 2^{exp}")
        self._cascade(idx, list(keys))

    def _push(self, idx: int, keys: list) -> list:
        c = self.levels[idx]
        before = len(c) + len(keys)
        out = c.insert_batch(keys)
        self._note_compaction(idx, before - len(c), len(out))
        return out

    def _note_compaction(self, idx: int, consumed: int, emitted: int) -> None:
        if consumed:
            self.parity_drift += (2 * emitted - consumed) << self.layout.level_exps[idx]

    def _cascade(self, idx: int, keys: list) -> None:
        while keys and idx < len(self.levels):
            keys = self._push_chunks(idx, keys)
            idx += 1
        if keys:
            self._to_buffer(keys)

    def _to_buffer(self, keys: list) -> None:
        buf = self.buffer
        if len(keys) == 1:
            insort(buf, keys[0])
        else:
            buf.extend(keys)
            buf.sort()
        if not self.sub and len(buf) > self.layout.buffer_cap:
            dropped = len(buf) - self.layout.buffer_cap
            del buf[self.layout.buffer_cap:]
            self.discarded += dropped << self.layout.top_exp

    # -- resizing ---------------------------------------------------------------

    def resize(self, space: int) -> None:
        if space < self.layout.k:
            raise ConfigError(f"space {space} is below the block size {self.layout.k}")
        carry: list = []
        for idx, c in enumerate(self.levels):
            out = self._push_chunks(idx, carry) if carry else []
            before = len(c)
            emitted = c.resize(space)
            self._note_compaction(idx, before - len(c), len(emitted))
            if emitted:
                out.extend(emitted)
                out.sort()
            carry = out
        if carry:
            self._to_buffer(carry)
        self.space = space

    def _push_chunks(self, idx: int, keys: list) -> list:
        limit = self.levels[idx].capacity
        if len(keys) <= limit:
            return self._push(idx, keys)
        out: list = []
        for start in range(0, len(keys), limit):
            out.extend(self._push(idx, keys[start:start + limit]))
        out.sort()
        return out

    # -- queries ------------------------------------------------------------------

    def rank(self, x: Key) -> int:
        total = 0
        for exp, c in zip(self.layout.level_exps, self.levels):
            if c.items:
                total += bisect_left(c.items, x) << exp
        if self.buffer:
            total += bisect_left(self.buffer, x) << self.layout.top_exp
        return total

    def total_weight(self) -> int:
        total = len(self.buffer) << self.layout.top_exp
        for exp, c in zip(self.layout.level_exps, self.levels):
            total += len(c.items) << exp
        return total

    def stored_count(self) -> int:
        return len(self.buffer) + sum(len(c.items) for c in self.levels)

    def keys(self) -> Iterator[Key]:
        for c in self.levels:
            yield from c.items
        yield from self.buffer

    def weighted_keys(self) -> Iterator[tuple]:
        for exp, c in zip(self.layout.level_exps, self.levels):
            for x in c.items:
                yield x, exp
        for x in self.buffer:
            yield x, self.layout.top_exp

    def min_key(self) -> Optional[Key]:
        best = None
        for c in self.levels:
            if c.items and (best is None or c.items[0] < best):
                best = c.items[0]
        if self.buffer and (best is None or self.buffer[0] < best):
            best = self.buffer[0]
        return best

    def max_key(self) -> Optional[Key]:
        best = None
        for c in self.levels:
            if c.items and (best is None or c.items[-1] > best):
                best = c.items[-1]
        if self.buffer and (best is None or self.buffer[-1] > best):
            best = self.buffer[-1]
        return best

    # -- sub-sketch support -------------------------------------------------------

    def remove_max(self) -> tuple:
        """Remove the largest stored key; ties go to the heaviest level. Returns (key, exp)."""
        best_idx = None
        best = None
        if self.buffer:
            best_idx, best = len(self.levels), self.buffer[-1]
        for idx in range(len(self.levels) - 1, -1, -1):
            items = self.levels[idx].items
            if items and (best is None or items[-1] > best):
                best_idx, best = idx, items[-1]
        if best_idx is None:
            raise IndexError("remove_max on an empty hierarchy")
        if best_idx == len(self.levels):
            exp = self.layout.top_exp
            key = self.buffer.pop()
        else:
            exp = self.layout.level_exps[best_idx]
            key = self.levels[best_idx].remove_max()
        self.removed += 1 << exp
        return key, exp

    def reset(self) -> None:
        for c in self.levels:
            c.reset()


def new_fixed_topq(eps, n: int, R: int, rng: Optional[random.Random] = None,
                   max_ratio: float = 0.25) -> Hierarchy:
    """Fixed-size top-R sketch built from ordinary relative compactors.

    Block size k = floor(1/(eps sqrt(log n))) (even, at least 2) and per-level
    space ceil(sqrt(log n)/eps) rounded up to a multiple of k.
    """
    m = eps_exponent(eps)
    if n < 2:
        raise ConfigError("n must be at least 2")
    root = math.sqrt(math.log2(n))
    eps_value = 1.0 / (1 << m)
    if eps_value * root > max_ratio:
        raise ConfigError(f"eps={eps_value} is too large for n={n}: need eps*sqrt(log n) <= {max_ratio}")
    k = int(1.0 / (eps_value * root) + 1e-9)
    k = max(2, k - k % 2)
    space = math.ceil(root / eps_value - 1e-9)
    space = -(-space // k) * k
    r = max(0, (R - 1).bit_length())
    layout = make_layout(m, r)
    layout = Layout(k, layout.sample_exp, layout.level_exps, layout.top_exp, layout.buffer_cap)
    return Hierarchy(Fraction(1, 1 << m), R, space, rng, layout=layout,
                     compactor=lambda kk, s, g: RelativeCompactor(kk, s, g))
