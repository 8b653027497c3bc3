"""The full relative-error sketch: one sub-sketch per rank scale plus an allocator."""
from __future__ import annotations

import json
import random
from bisect import bisect_left, bisect_right, insort
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .allocator import Allocator, TraceRow
from .compactor import Key
from .params import ConfigError, eps_exponent, format_eps, format_key, loglog_delta, parse_key
from .subsketch import SubSketch

SNAPSHOT_FORMAT = "relquant-sketch"
SNAPSHOT_VERSION = 1


@dataclass
class SpaceTrace:
    rows: list = field(default_factory=list)
    stored: list = field(default_factory=list)  # stored-key count after each step
    peak_stored: int = 0
    steps: int = 0
    max_accumulator: float = 0.0
    max_parents: int = 0
    max_child_steps: int = 0
    spaces: list = field(default_factory=list)  # current per-scale space


class RelativeSketch:
    """Streaming rank estimator with error proportional to the rank."""

    def __init__(self, eps="1/64", seed: int = 0, mode: str = "const",
                 delta: Optional[float] = None, trace: bool = False, instrument: bool = False):
        self.m = eps_exponent(eps)
        self.eps = f"1/{1 << self.m}"
        if mode not in ("const", "highprob"):
            raise ConfigError(f"unknown mode {mode!r}")
        if mode == "highprob":
            if delta is None:
                raise ConfigError("high-probability mode needs delta")
            loglog_delta(delta)
        self.mode = mode
        self.delta = delta
        self.seed = seed
        self.batch = 1 << self.m
        self.tracing = trace
        self.instrument = instrument
        self.rng = random.Random(seed)
        self.allocator = Allocator(self.eps, mode, delta, trace=trace, record_intervals=instrument)
        self.subs: list[SubSketch] = [self._new_sub(0)]
        self.staging: list[list] = [[]]
        self._mins: list = []  # min keys of the non-empty sub-sketches 1, 2, ...
        self.n_seen = 0
        self.staged = 0
        self.stored_in_subs = 0
        self.peak_stored = 0
        self.stored_per_step: list[int] = []
        self.overflow_log: list = []  # (scale, batch keys) when instrumented

    def _new_sub(self, index: int) -> SubSketch:
        return SubSketch(index, self.eps, self.allocator.space_target(index), self.rng,
                         mode=self.mode, delta=self.delta, instrument=self.instrument)

    # -- ingestion ------------------------------------------------------------

    def insert(self, x: Key) -> None:
        i = bisect_right(self._mins, x)
        stage = self.staging[i]
        insort(stage, x)
        self.n_seen += 1
        self.staged += 1
        if len(stage) >= self.batch:
            self._flush(i)
            self._reconcile()
            self.stored_in_subs = sum(s.stored_count() for s in self.subs)
        total = self.stored_in_subs + self.staged
        if total > self.peak_stored:
            self.peak_stored = total

    def extend(self, xs: Iterable[Key]) -> None:
        for x in xs:
            self.insert(x)

    def _step(self, i: int) -> None:
        self.allocator.note_step(i, self.subs[i].space)
        if self.tracing:
            self.stored_per_step.append(sum(s.stored_count() for s in self.subs) + self.staged)

    def _flush(self, i: int) -> None:
        keys = self.staging[i]
        if not keys:
            return
        self.staging[i] = []
        self.staged -= len(keys)
        sub = self.subs[i]
        if sub.flush(keys):
            self._step(i)
            self._refresh_min(i)
            self._overflow(i)

    def _overflow(self, i: int) -> None:
        sub = self.subs[i]
        if not sub.overflowing():
            return
        batch = sub.drain()
        self._refresh_min(i)
        if self.instrument:
            self.overflow_log.append((i, [key for key, _ in batch]))
        nxt = i + 1
        self.allocator.on_reset(nxt)
        if nxt == len(self.subs):
            self.subs.append(self._new_sub(nxt))
            self.staging.append([])
        receiver = self.subs[nxt]
        receiver.reset()
        # staged keys of the receiver lie above every key of this batch; store them first
        staged = self.staging[nxt]
        if staged:
            self.staging[nxt] = []
            self.staged -= len(staged)
            if receiver.flush(staged):
                self._step(nxt)
        for exp, keys in receiver.split_batch(batch):
            receiver.insert_chunk(exp, keys)
            self._step(nxt)
        self._refresh_min(nxt)
        self._overflow(nxt)

    def _refresh_min(self, i: int) -> None:
        if i == 0:
            return
        low = self.subs[i].min_key
        if low is None:
            del self._mins[i - 1:]
        elif i - 1 < len(self._mins):
            self._mins[i - 1] = low
        elif i - 1 == len(self._mins):
            self._mins.append(low)

    def _reconcile(self) -> None:
        alloc = self.allocator
        changed = True
        while changed:
            changed = False
            for i in range(min(alloc.depth, len(self.subs))):
                target = alloc.space_target(i)
                sub = self.subs[i]
                if target != sub.space:
                    sub.resize(target)
                    self._step(i)
                    self._overflow(i)
                    changed = True

    # -- queries --------------------------------------------------------------

    def query(self, x: Key) -> int:
        total = 0
        for sub in self.subs:
            if sub.min_key is not None and sub.min_key < x:
                total += sub.rank(x)
        for stage in self.staging:
            if stage:
                total += bisect_left(stage, x)
        return total

    def query_grid(self, xs: Sequence[Key]) -> list:
        return [self.query(x) for x in xs]

    def stored_count(self) -> int:
        return sum(s.stored_count() for s in self.subs) + self.staged

    def memory_snapshot(self) -> list:
        keys: list = []
        for sub in self.subs:
            keys.extend(sub.h.keys())
        for stage in self.staging:
            keys.extend(stage)
        return keys

    def contains(self, x: Key) -> bool:
        for sub in self.subs:
            for c in sub.h.levels:
                j = bisect_left(c.items, x)
                if j < len(c.items) and c.items[j] == x:
                    return True
            buf = sub.h.buffer
            j = bisect_left(buf, x)
            if j < len(buf) and buf[j] == x:
                return True
        for stage in self.staging:
            j = bisect_left(stage, x)
            if j < len(stage) and stage[j] == x:
                return True
        return False

    def stats(self) -> SpaceTrace:
        if not self.tracing:
            raise RuntimeError("tracing is disabled for this sketch")
        alloc = self.allocator
        return SpaceTrace(
            rows=list(alloc.trace), stored=list(self.stored_per_step),
            peak_stored=self.peak_stored, steps=alloc.steps,
            max_accumulator=alloc.max_accumulator, max_parents=alloc.max_parents,
            max_child_steps=alloc.max_child_steps, spaces=[s.space for s in self.subs])

    def trace_rows(self) -> list[TraceRow]:
        return list(self.allocator.trace or [])

    # -- invariants -----------------------------------------------------------

    def check_invariants(self) -> list[str]:
        """Return descriptions of any violated structural invariant (empty when healthy)."""
        problems = []
        previous_max = None
        for sub in self.subs:
            keys = list(sub.h.keys())
            if not keys:
                continue
            low, high = min(keys), max(keys)
            if previous_max is not None and previous_max > low:
                problems.append(f"scale {sub.index} starts below the previous scale")
            previous_max = high
            if sub.min_key != low:
                problems.append(f"scale {sub.index} has a stale minimum")
            weight = sub.h.total_weight()
            if weight != sub.total_weight:
                problems.append(f"scale {sub.index} weight counter drifted")
            if weight > 3 * sub.R:
                problems.append(f"scale {sub.index} weight {weight} exceeds 3R")
            if sub.reached_R and weight < sub.R:
                problems.append(f"scale {sub.index} weight {weight} fell below R")
        return problems

    # -- persistence ----------------------------------------------------------

    def dumps(self) -> str:
        """Versioned JSON snapshot that resumes ingestion deterministically."""
        subs = []
        for sub in self.subs:
            h = sub.h
            subs.append({
                "index": sub.index,
                "space": h.space,
                "min": None if sub.min_key is None else format_key(sub.min_key),
                "reached_R": sub.reached_R,
                "levels": [{"items": [format_key(x) for x in c.items], "z": c._z,
                            "zbits": c._zbits, "nblocks": c.nblocks,
                            "emitted": c.emitted_count} for c in h.levels],
                "buffer": [format_key(x) for x in h.buffer],
                "weights": [h.accepted, h.discarded, h.removed, h.parity_drift],
            })
        version, state, gauss = self.rng.getstate()
        doc = {
            "format": SNAPSHOT_FORMAT,
            "version": SNAPSHOT_VERSION,
            "eps": format_eps(self.m),
            "mode": self.mode,
            "delta": self.delta,
            "seed": self.seed,
            "rng": [version, list(state), gauss],
            "n_seen": self.n_seen,
            "peak_stored": self.peak_stored,
            "allocator": self.allocator.state(),
            "subs": subs,
            "staging": [[format_key(x) for x in stage] for stage in self.staging],
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "RelativeSketch":
        doc = json.loads(text)
        if doc.get("format") != SNAPSHOT_FORMAT or doc.get("version") != SNAPSHOT_VERSION:
            raise ConfigError("unrecognised sketch snapshot")
        sk = cls(doc["eps"], doc["seed"], doc["mode"], doc["delta"])
        version, state, gauss = doc["rng"]
        sk.rng.setstate((version, tuple(state), gauss))
        sk.n_seen = doc["n_seen"]
        sk.peak_stored = doc["peak_stored"]
        sk.allocator.load_state(doc["allocator"])
        sk.subs = []
        for entry in doc["subs"]:
            sub = SubSketch(entry["index"], sk.eps, entry["space"], sk.rng,
                            mode=sk.mode, delta=sk.delta)
            for c, saved in zip(sub.h.levels, entry["levels"]):
                c.items = [parse_key(x) for x in saved["items"]]
                c._z, c._zbits = saved["z"], saved["zbits"]
                c.nblocks = saved["nblocks"]
                c.emitted_count = saved["emitted"]
            sub.h.buffer = [parse_key(x) for x in entry["buffer"]]
            h = sub.h
            h.accepted, h.discarded, h.removed, h.parity_drift = entry["weights"]
            sub.min_key = None if entry["min"] is None else parse_key(entry["min"])
            sub.reached_R = entry["reached_R"]
            sk.subs.append(sub)
        sk.staging = [[parse_key(x) for x in stage] for stage in doc["staging"]]
        sk.staged = sum(len(stage) for stage in sk.staging)
        sk._mins = []
        for sub in sk.subs[1:]:
            if sub.min_key is None:
                break
            sk._mins.append(sub.min_key)
        sk.stored_in_subs = sum(s.stored_count() for s in sk.subs)
        return sk
