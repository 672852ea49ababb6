import numpy as np
import pytest

ACCEPTANCE_LINES = []


def record(number, title, passed, detail=""):
    """Store one acceptance line; printed in the terminal summary."""
    line = f"criterion {number:>2} [{'PASS' if passed else 'FAIL'}] {title}"
    if detail:
        line += f" :: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def random_sl(rng, n, scale=1.0):
    """Random matrix with determinant +1."""
    T = scale * rng.standard_normal((n, n)) + np.eye(n)
    if np.linalg.det(T) < 0:
        T[:, 0] *= -1
    return T / np.linalg.det(T) ** (1.0 / n)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
