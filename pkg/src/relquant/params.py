"""Accuracy-parameter parsing and the key wire format."""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Union

Number = Union[int, Fraction]


class ConfigError(ValueError):
    """Invalid user-supplied configuration."""


def eps_exponent(eps: Union[str, float, Fraction]) -> int:
    """Return m such that eps == 2**-m; eps may be given as "1/64", 0.25, Fraction(1, 8)."""
    if isinstance(eps, str):
        text = eps.strip()
        try:
            value = Fraction(text)
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"cannot parse epsilon {eps!r}; expected a literal like 1/64")
    else:
        value = Fraction(eps)
    if not 0 < value <= 1:
        raise ConfigError(f"epsilon must lie in (0, 1], got {eps}")
    inverse = 1 / value
    if inverse.denominator != 1 or inverse.numerator & (inverse.numerator - 1):
        raise ConfigError(f"epsilon must be 1/2^m, got {eps}")
    return inverse.numerator.bit_length() - 1


def format_eps(m: int) -> str:
    return f"1/{1 << m}"


def loglog_delta(delta: float) -> float:
    """log log (1/delta), floored at 1 so that the high-probability constants stay positive."""
    if not 0 < delta <= 0.5:
        raise ConfigError(f"delta must lie in (0, 0.5], got {delta}")
    return max(1.0, math.log2(math.log2(1 / delta)))


def parse_key(text: str) -> Number:
    text = text.strip()
    if "/" in text:
        p, q = text.split("/", 1)
        return Fraction(int(p), int(q))
    return int(text)


def format_key(key: Number) -> str:
    if isinstance(key, Fraction):
        if key.denominator == 1:
            return f"{key.numerator}/1"
        return f"{key.numerator}/{key.denominator}"
    return str(key)


def parse_keys(lines: Iterable[str]) -> list:
    """Parse newline-delimited keys; a file must be all integers or all p/q labels."""
    keys: list = []
    kinds = set()
    for lineno, line in enumerate(lines, 1):
        line = line.strip()
        if not line:
            continue
        try:
            keys.append(parse_key(line))
        except (ValueError, ZeroDivisionError):
            raise ConfigError(f"line {lineno}: cannot parse key {line!r}")
        kinds.add("/" in line)
        if len(kinds) > 1:
            raise ConfigError(f"line {lineno}: integer and p/q keys are mixed")
    return keys
