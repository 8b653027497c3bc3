import random

import pytest


class FixedCoin(random.Random):
    """Random source whose single-bit draws are pinned; other draws are seeded."""

    def __init__(self, bit):
        super().__init__(0)
        self.bit = bit

    def getrandbits(self, n):
        if n == 1:
            return self.bit
        return super().getrandbits(n)


@pytest.fixture
def coin():
    return FixedCoin


VERDICTS = []


def record_verdict(number, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} -- {detail}"
    VERDICTS.append((number, line))
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(VERDICTS):
            terminalreporter.write_line(line)
