import mpmath
import numpy as np
import pytest

# (criterion number, PASS/FAIL/INFO, detail) lines collected by the acceptance suite.
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"criterion {number:>2}: {status:<4} {detail}")


def e_bits(n: int) -> np.ndarray:
    """First ``n`` bits of the binary expansion of e (integer part '10' included)."""
    with mpmath.workprec(n + 64):
        v = int(mpmath.floor(mpmath.e * mpmath.mpf(2) ** (n - 2)))
    s = bin(v)[2:][:n]
    return np.frombuffer(s.encode("ascii"), dtype=np.uint8) - ord("0")


@pytest.fixture(scope="session")
def e_million():
    return e_bits(1_000_000)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
