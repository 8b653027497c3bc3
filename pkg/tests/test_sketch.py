import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from relquant.eval import RankOracle, gen_stream
from relquant.params import ConfigError
from relquant.report import space_formula
from relquant.sketch import RelativeSketch
from relquant.subsketch import SubSketch


def test_empty_sketch():
    sk = RelativeSketch("1/8")
    assert sk.query(5) == 0
    assert sk.memory_snapshot() == []


def test_first_key_goes_to_scale_zero():
    sk = RelativeSketch("1/8")
    sk.insert(42)
    assert sk.staging[0] == [42]
    assert 42 in sk.memory_snapshot() and sk.contains(42)


def test_new_minimum_routes_to_scale_zero():
    sk = RelativeSketch("1/4", seed=1)
    sk.extend(range(1000, 3000))
    assert len(sk.subs) > 1
    sk.insert(-5)
    assert -5 in sk.staging[0]


def test_query_below_everything_is_zero():
    sk = RelativeSketch("1/8", seed=2)
    sk.extend(range(10, 5000))
    assert sk.query(10) == 0 and sk.query(-3) == 0


def test_query_grid_matches_query():
    sk = RelativeSketch("1/8", seed=3)
    sk.extend(random.Random(0).sample(range(10 ** 6), 5000))
    assert sk.query_grid([777]) == [sk.query(777)]


def test_tiny_sketch_is_exact():
    keys = [5, 1, 9, 3, 3, 7]
    sk = RelativeSketch("1/8")
    sk.extend(keys)
    oracle = RankOracle(keys)
    grid = sorted(set(keys)) + [10]
    assert sk.query_grid(grid) == [oracle.exact_rank(x) for x in grid]


def test_head_ranks_exact_on_small_streams():
    for seed in range(10):
        rng = random.Random(seed)
        keys = [rng.randrange(10 ** 9) for _ in range(rng.randrange(1, 10 ** 4))]
        sk = RelativeSketch("1/16", seed)
        sk.extend(keys)
        oracle = RankOracle(keys)
        for r in range(min(16, len(keys))):
            x = oracle.key_at_rank(r)
            assert sk.query(x) == oracle.exact_rank(x)


def test_snapshot_size_matches_accounting():
    sk = RelativeSketch("1/8", seed=4)
    for x in random.Random(1).sample(range(10 ** 6), 4000):
        sk.insert(x)
        assert len(sk.memory_snapshot()) == sk.stored_count() == sk.stored_in_subs + sk.staged


def test_reset_precedes_delivery(monkeypatch):
    events = []
    real_reset, real_chunk = SubSketch.reset, SubSketch.insert_chunk

    def reset(self):
        events.append(("reset", self.index))
        real_reset(self)

    def chunk(self, exp, keys):
        events.append(("chunk", self.index))
        real_chunk(self, exp, keys)

    monkeypatch.setattr(SubSketch, "reset", reset)
    monkeypatch.setattr(SubSketch, "insert_chunk", chunk)
    sk = RelativeSketch("1/4", seed=5, instrument=True)
    sk.extend(random.Random(2).sample(range(10 ** 6), 3000))
    assert sk.overflow_log
    for j, (kind, index) in enumerate(events):
        if kind == "chunk" and (j == 0 or events[j - 1] != ("chunk", index)):
            assert events[j - 1] == ("reset", index)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 5000), max_size=3000), st.integers(0, 1000),
       st.sampled_from(["1/2", "1/4", "1/8"]))
def test_structural_invariants(keys, seed, eps):
    sk = RelativeSketch(eps, seed)
    for j, x in enumerate(keys):
        sk.insert(x)
        if j % 97 == 0:
            assert sk.check_invariants() == []
    assert sk.check_invariants() == []


def test_invariants_on_adversarial_orders():
    for kind in ("sorted", "reverse", "tree_instance"):
        sk = RelativeSketch("1/8", seed=6)
        for j, x in enumerate(gen_stream(kind, 30_000, 3)):
            sk.insert(x)
            if j % 1000 == 0:
                assert sk.check_invariants() == [], kind
        assert sk.check_invariants() == []


def test_stats_needs_tracing():
    with pytest.raises(RuntimeError):
        RelativeSketch("1/8").stats()


def test_empty_trace():
    st_ = RelativeSketch("1/8", trace=True).stats()
    assert st_.rows == [] and st_.steps == 0


def test_trace_rows_match_steps():
    sk = RelativeSketch("1/8", seed=7, trace=True)
    sk.extend(range(20_000))
    st_ = sk.stats()
    assert len(st_.rows) == st_.steps == len(st_.stored)
    assert [r.step for r in st_.rows] == list(range(1, st_.steps + 1))


def test_deterministic_runs():
    keys = gen_stream("uniform", 30_000, 9)
    a, b = RelativeSketch("1/16", 3, trace=True), RelativeSketch("1/16", 3, trace=True)
    a.extend(keys)
    b.extend(keys)
    grid = sorted(keys)[::997]
    assert a.query_grid(grid) == b.query_grid(grid)
    assert a.trace_rows() == b.trace_rows()
    assert a.dumps() == b.dumps()


def test_snapshot_resumes_identically():
    keys = gen_stream("uniform", 40_000, 10)
    whole = RelativeSketch("1/16", 4)
    whole.extend(keys)
    half = RelativeSketch("1/16", 4)
    half.extend(keys[:17_321])
    resumed = RelativeSketch.loads(half.dumps())
    resumed.extend(keys[17_321:])
    grid = sorted(keys)[::501]
    assert resumed.query_grid(grid) == whole.query_grid(grid)
    assert resumed.dumps() == whole.dumps()


def test_snapshot_rejects_foreign_documents():
    with pytest.raises(ConfigError):
        RelativeSketch.loads('{"format": "other", "version": 1}')


def test_config_validation():
    with pytest.raises(ConfigError):
        RelativeSketch("1/3")
    with pytest.raises(ConfigError):
        RelativeSketch("1/8", mode="highprob")
    with pytest.raises(ConfigError):
        RelativeSketch("1/8", mode="highprob", delta=0.7)
    with pytest.raises(ConfigError):
        RelativeSketch("1/8", mode="fast")


def test_high_probability_mode_runs_feasibly():
    sk = RelativeSketch("1/4", seed=1, mode="highprob", delta=0.01)
    keys = gen_stream("uniform", 30_000, 2)
    sk.extend(keys)
    assert sk.check_invariants() == []
    assert sk.allocator.max_accumulator <= 0.25
    oracle = RankOracle(keys)
    for r in (10, 100, 1000, 10_000):
        x = oracle.key_at_rank(r)
        assert abs(sk.query(x) - r) <= r / 4


ALLOC_RUNS = [("uniform", "1/16"), ("sorted", "1/16"), ("reverse", "1/8"), ("tree_instance", "1/16")]


@pytest.mark.parametrize("kind,eps", ALLOC_RUNS)
def test_allocator_bounds_along_a_run(kind, eps):
    sk = RelativeSketch(eps, seed=2, instrument=True)
    inv = 1 << sk.m
    keys = gen_stream(kind, 50_000, 5)
    for j, x in enumerate(keys, 1):
        sk.insert(x)
        if j % 2500 == 0:
            alloc = sk.allocator
            log_en = max(1, math.log2(max(j / inv, 2)))
            # potentials stay below 4^(log(eps n) + 1) * T
            assert alloc.phi(0) <= 4 ** (log_en + 1) * alloc.steps
            allocated = sum(s.space for s in sk.subs) * sk.m
            assert allocated <= space_formula(sk.m, j)
    alloc = sk.allocator
    assert alloc.max_parents <= 4
    assert all(iv.parents <= 4 for iv in alloc.intervals)
    assert alloc.max_accumulator <= 0.25
    # steps at one scale inside one child interval
    assert alloc.max_child_steps <= 3 * inv * inv + 2
