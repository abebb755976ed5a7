import numpy as np
import pytest

from irggkss.graph import Graph


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def random_graph(rng, n, p=0.4, labels=None):
    N = n * (n - 1) // 2
    return Graph(n, (rng.random(N) < p).astype(np.uint8), labels)


# acceptance criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
