import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from relquant.allocator import Allocator, loglog_term, power_of_two_exponent


def test_space_target_worked_example():
    a = Allocator("1/4")
    a.steps = 100                 # ceil(log2 ceil(log2 100)) = 3
    a.committed, a.pending = [6, 1], True   # phi(0) = 8, phi(1) = 2
    a.started, a.accumulator, a.parents, a.child_steps = [0, 0], [0.0, 0.0], [1, 1], [0, 0]
    assert (a.phi(0), a.phi(1), loglog_term(a.steps)) == (8, 2, 3)
    independent = 4 * (math.log2(8 / 2) + 5 * math.log2(4) + 5 * 3)
    assert a.space_target(0) == independent == 108


def test_space_target_without_nesting_gap():
    a = Allocator("1/8")
    a.note_step(0, 100)
    assert a.phi(0) == a.phi(1) == 1
    assert a.space_target(0) == 8 * (5 * 3 + 5 * 2)


def test_loglog_term_floor():
    assert [loglog_term(t) for t in (0, 1, 2, 16, 17, 256, 257)] == [2, 2, 2, 2, 3, 3, 4]


def test_power_of_two_rounding():
    assert [power_of_two_exponent(p) for p in (1, 2, 3, 4, 5, 8, 9)] == [0, 1, 2, 2, 3, 3, 4]


def test_potential_after_one_step():
    a = Allocator("1/4")
    a.note_step(2, 40)
    assert all(a.phi(i) >= 1 for i in range(5))


def test_steps_without_resets_accumulate():
    a = Allocator("1/4")
    for _ in range(37):
        a.note_step(0, 40)
    assert a.phi(0) == 37


def test_reset_commits_child_potential():
    a = Allocator("1/4", record_intervals=True)
    for level in (0, 1, 1, 1):
        a.note_step(level, 40)
    before = a.committed[0]
    p = a.phi(1)
    a.on_reset(1)
    assert a.committed[0] == before + p
    assert a.intervals[-1].phi == p


def test_back_to_back_resets_close_positive_intervals():
    a = Allocator("1/4", record_intervals=True)
    for _ in range(3):
        a.note_step(1, 40)
    a.on_reset(1)
    a.on_reset(1)
    assert a.intervals[-1].phi >= 1


def test_reset_of_unmaterialized_level_is_noop():
    a = Allocator("1/4")
    a.note_step(0, 40)
    a.on_reset(3)
    assert a.depth == 1


def test_feasibility_accumulator():
    a = Allocator("1/4")
    assert a.feasibility(0) == 0.0
    a.note_step(0, 20)
    assert a.feasibility(0) == 2.0 ** (-20 / 4)


def test_nested_intervals_have_length_potential():
    # level 1 resets every 3..7 steps, and level 0 resets only together with level 1
    rng = random.Random(0)
    a = Allocator("1/4", record_intervals=True)
    a.note_step(1, 40)
    taken = 1
    for _ in range(40):
        for _ in range(rng.randrange(3, 8) - taken):
            a.note_step(1, 40)
        if rng.random() < 0.3:
            a.on_reset(1)
            a.on_reset(0)
        else:
            a.on_reset(1)
        a.note_step(1, 40)
        taken = 1
    for iv in a.intervals:
        assert iv.phi == iv.end - iv.start


# -- offline oracle --------------------------------------------------------------------

def offline_potentials(depth, events):
    """Closed-interval potentials from the definition, evaluated at each close time.

    events: ("step", level) or ("reset", level).  Intervals are step sets (s, e];
    the level below the deepest resets at every step.
    """
    t = 0
    opened = [0] * depth
    closed = [[] for _ in range(depth)]   # (start, end)
    order = []
    for kind, level in events:
        if kind == "step":
            t += 1
        else:
            closed[level].append((opened[level], t))
            order.append((level, opened[level], t))
            opened[level] = t

    def intervals(level):
        return closed[level] + [(opened[level], math.inf)]

    def value(level, s, e):
        if level == depth - 1:
            return e - s  # one unit interval per step
        total = 0
        for cs, ce in intervals(level + 1):
            lo, hi = max(s, cs), min(e, ce)
            if lo < hi:
                total += value(level + 1, cs, min(ce, e))
        return total

    return [value(level, s, e) for level, s, e in order]


@settings(max_examples=150, deadline=None)
@given(st.integers(2, 4), st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3),
                                             st.booleans()), min_size=1, max_size=80))
def test_online_potentials_match_offline_definition(depth, plan):
    a = Allocator("1/4", record_intervals=True)
    events = []
    a.note_step(depth - 1, 40)  # materialize every level
    events.append(("step", depth - 1))
    for step_level, reset_level, do_reset in plan:
        if do_reset:
            a.on_reset(reset_level % depth)
            events.append(("reset", reset_level % depth))
        a.note_step(step_level % depth, 40)   # every reset is followed by a step
        events.append(("step", step_level % depth))
    assert [iv.phi for iv in a.intervals] == offline_potentials(depth, events)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.booleans()), max_size=120))
def test_state_round_trip(plan):
    a = Allocator("1/8")
    for level, reset in plan:
        if reset:
            a.on_reset(level)
        a.note_step(level, 8 * 40)
    b = Allocator("1/8")
    b.load_state(a.state())
    assert b.state() == a.state()
    assert [b.space_target(i) for i in range(5)] == [a.space_target(i) for i in range(5)]
