"""Synthetic key streams.  Keys are integers, i.e. rationals with denominator 1."""
from __future__ import annotations

import math
import random
from typing import Optional

from ..params import ConfigError

BAND_BITS = 40


def _uniform(n: int, rng: random.Random) -> list:
    return [rng.getrandbits(48) for _ in range(n)]


def _permutation(n: int, rng: random.Random) -> list:
    keys = list(range(n))
    rng.shuffle(keys)
    return keys


def tree_instance(n: int, seed: int = 0, batch: Optional[int] = None, pauses: int = 100,
                  depth: Optional[int] = None, with_bands: bool = False):
    """Recursive batch stream aimed at successive sketch scales.

    A batch of ``batch`` keys is emitted for band 0, interrupted at ``pauses``
    random points; each pause emits a full batch for the next band, recursively,
    up to ``depth`` bands.  Every key of band d lies above every key of band d-1.
    Whole trees repeat until n keys have been produced.
    """
    if n < 0:
        raise ConfigError("n must be non-negative")
    if batch is None:
        batch = max(1, math.ceil(n ** 0.1 - 1e-9))
    if depth is None:
        depth = max(2, math.ceil(0.1 * math.log2(max(n, 2)))) + 1
    if batch < 1 or pauses < 0 or depth < 1:
        raise ConfigError("tree instance needs batch >= 1, pauses >= 0, depth >= 1")
    rng = random.Random(seed)
    keys: list = []
    bands: list = []

    def emit(level: int) -> None:
        gaps = sorted(rng.randrange(batch + 1) for _ in range(pauses)) if level + 1 < depth else []
        g = 0
        for j in range(batch + 1):
            while g < len(gaps) and gaps[g] == j:
                if len(keys) >= n:
                    return
                emit(level + 1)
                g += 1
            if j < batch:
                if len(keys) >= n:
                    return
                keys.append((level << BAND_BITS) + rng.getrandbits(BAND_BITS))
                bands.append(level)

    while len(keys) < n:
        emit(0)
    return (keys, bands) if with_bands else keys


GENERATORS = ("uniform", "sorted", "reverse", "permutation", "tree_instance")


def gen_stream(kind: str, n: int, seed: int = 0, **params) -> list:
    if n < 0:
        raise ConfigError("n must be non-negative")
    rng = random.Random(seed)
    if kind == "uniform":
        return _uniform(n, rng)
    if kind == "sorted":
        return list(range(n))
    if kind == "reverse":
        return list(range(n - 1, -1, -1))
    if kind == "permutation":
        return _permutation(n, rng)
    if kind == "tree_instance":
        return tree_instance(n, seed, **params)
    raise ConfigError(f"unknown generator {kind!r}; choose from {', '.join(GENERATORS)}")
