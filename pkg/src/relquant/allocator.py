"""Online space allocation driven by reset-interval potentials.

Level ``i`` is the sub-sketch of scale ``i``; its intervals are delimited by
its resets.  The potential of an open interval is the sum of the potentials of
the level-(i+1) intervals that intersected it, where closed ones contribute the
value they had when they closed and the open one contributes its current value.
Levels below the deepest non-empty sketch reset at every step, so their open
interval always has potential 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .hierarchy import make_layout
from .params import ConfigError, eps_exponent, loglog_delta

PHI_LIMIT = 1 << 256


@dataclass(frozen=True)
class TraceRow:
    step: int
    level: int
    s_hat: int
    phi_level: int
    phi_child: int
    accumulator: float

    FIELDS = ("step", "level", "s_hat", "phi_level", "phi_child", "accumulator")

    def as_tuple(self) -> tuple:
        return (self.step, self.level, self.s_hat, self.phi_level, self.phi_child,
                self.accumulator)


@dataclass(frozen=True)
class ClosedInterval:
    level: int
    start: int
    end: int
    phi: int
    parents: int


def power_of_two_exponent(phi: int) -> int:
    """log2 of phi rounded up to a power of two."""
    return (phi - 1).bit_length()


def loglog_term(steps: int) -> int:
    """ceil(log2 log2 T), floored at 2."""
    bits = (max(steps, 2) - 1).bit_length()  # ceil(log2 T)
    return max(2, (bits - 1).bit_length())


class Allocator:
    """Tracks interval potentials and hands out per-scale space targets."""

    def __init__(self, eps, mode: str = "const", delta: Optional[float] = None,
                 trace: bool = False, record_intervals: bool = False):
        self.m = eps_exponent(eps)
        self.mode = mode
        self.delta = delta
        self.k = make_layout(self.m, 0, mode, delta).k
        if mode == "highprob":
            self.scale = self.k * math.ceil(loglog_delta(delta))
        elif mode == "const":
            self.scale = self.k
        else:
            raise ConfigError(f"unknown mode {mode!r}")
        self.steps = 0
        # the last step's unit interval, not yet charged to the deepest open interval
        self.pending = False
        self.committed: list[int] = []
        self.started: list[int] = []
        self.accumulator: list[float] = []
        self.parents: list[int] = []
        self.child_steps: list[int] = []
        self.max_accumulator = 0.0
        self.max_parents = 0
        self.max_child_steps = 0
        self.trace: Optional[list[TraceRow]] = [] if trace else None
        self.intervals: Optional[list[ClosedInterval]] = [] if record_intervals else None

    @property
    def depth(self) -> int:
        """Number of materialized (non-empty) levels."""
        return len(self.committed)

    def _ensure(self, level: int) -> None:
        while len(self.committed) <= level:
            self.committed.append(0)
            self.started.append(self.steps)
            self.accumulator.append(0.0)
            self.parents.append(1)
            self.child_steps.append(0)

    def phi(self, level: int) -> int:
        if level >= len(self.committed):
            return 1
        # the open bottom interval counts once it holds a step; an empty interval still counts 1
        value = max(1, sum(self.committed[level:]) + self.pending)
        if value > PHI_LIMIT:
            raise OverflowError("interval potential overflowed")
        return value

    def note_step(self, level: int, space: int) -> None:
        """Record one memory-changing operation on the sketch of the given level."""
        if self.pending and self.committed:
            self.committed[-1] += 1  # the previous bottom interval closes
        self._ensure(level)
        self.pending = True
        self.steps += 1
        acc = self.accumulator[level] + 2.0 ** (-space / self.k)
        self.accumulator[level] = acc
        if acc > self.max_accumulator:
            self.max_accumulator = acc
        self.child_steps[level] += 1
        if self.child_steps[level] > self.max_child_steps:
            self.max_child_steps = self.child_steps[level]
        if self.trace is not None:
            self.trace.append(TraceRow(self.steps, level, space, self.phi(level),
                                       self.phi(level + 1), acc))

    def on_reset(self, level: int) -> None:
        if level >= len(self.committed):
            return  # empty levels reset every step anyway
        closed = self.phi(level)
        if level == len(self.committed) - 1:
            self.pending = False  # already counted in the interval just closed
        if level > 0:
            self.committed[level - 1] += closed
            self.child_steps[level - 1] = 0
        if self.intervals is not None:
            self.intervals.append(ClosedInterval(level, self.started[level], self.steps,
                                                 closed, self.parents[level]))
        self.max_parents = max(self.max_parents, self.parents[level])
        self.committed[level] = 0
        self.started[level] = self.steps
        self.accumulator[level] = 0.0
        self.parents[level] = 1
        self.child_steps[level] = 0
        if level + 1 < len(self.committed):
            self.parents[level + 1] += 1

    def space_target(self, level: int) -> int:
        ratio = power_of_two_exponent(self.phi(level)) - power_of_two_exponent(self.phi(level + 1))
        return self.scale * (ratio + 5 * self.m + 5 * loglog_term(self.steps))

    def feasibility(self, level: int) -> float:
        if level >= len(self.accumulator):
            return 0.0
        return self.accumulator[level]

    def open_parent_counts(self) -> list[int]:
        return list(self.parents)

    def state(self) -> dict:
        return {
            "steps": self.steps,
            "pending": self.pending,
            "committed": list(self.committed),
            "started": list(self.started),
            "accumulator": [repr(a) for a in self.accumulator],
            "parents": list(self.parents),
            "child_steps": list(self.child_steps),
            "max_accumulator": repr(self.max_accumulator),
            "max_parents": self.max_parents,
            "max_child_steps": self.max_child_steps,
        }

    def load_state(self, state: dict) -> None:
        self.steps = state["steps"]
        self.pending = state["pending"]
        self.committed = list(state["committed"])
        self.started = list(state["started"])
        self.accumulator = [float(a) for a in state["accumulator"]]
        self.parents = list(state["parents"])
        self.child_steps = list(state["child_steps"])
        self.max_accumulator = float(state["max_accumulator"])
        self.max_parents = state["max_parents"]
        self.max_child_steps = state["max_child_steps"]
