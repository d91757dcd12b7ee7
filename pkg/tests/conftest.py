import mpmath as mp
import pytest

from gapprob.specfun import PrecisionContext


@pytest.fixture
def ctx64():
    return PrecisionContext(64)


@pytest.fixture
def ctx128():
    return PrecisionContext(128)


@pytest.fixture
def ctx256():
    return PrecisionContext(256)


def close(a, b, rel=1e-12, abs_=0.0):
    """Relative/absolute closeness for mpf or float values."""
    a, b = mp.mpf(a), mp.mpf(b)
    return abs(a - b) <= max(abs_, rel * max(abs(a), abs(b)))


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results, key=lambda k: (int(k.rstrip("abc")), k)):
        terminalreporter.write_line(results[key])
