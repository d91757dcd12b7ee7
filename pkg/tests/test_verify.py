import pytest

from gapprob.verify import Check, SUITES, constants_suite, doubling_suite, identities_suite, run_suite


def test_check_record():
    ok, bad = Check("a", 1e-12, 1e-9), Check("b", -1e-3, 1e-9)
    assert ok.passed and not bad.passed
    assert ok.line().startswith("PASS") and bad.line().startswith("FAIL")


def test_identities_suite():
    checks = identities_suite()
    assert len(checks) == 22 and all(c.passed for c in checks)


def test_constants_suite():
    checks = constants_suite()
    assert len(checks) == 9
    assert all(c.passed for c in checks), [c.line() for c in checks if not c.passed]


@pytest.mark.slow
def test_doubling_suite():
    checks = doubling_suite()
    assert len(checks) == 40 and all(c.passed for c in checks)


def test_run_suite_dispatch():
    assert set(SUITES) == {"identities", "constants", "doubling"}
    assert len(run_suite("identities")) == 22
    with pytest.raises(KeyError):
        run_suite("nope")
