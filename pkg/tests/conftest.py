import pytest


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.passed:
        status = "PASS"
    elif report.skipped:
        status = "XFAIL" if "xfail" in str(report.keywords) else "SKIP"
    else:
        status = "FAIL"
    print(f"\nACCEPTANCE {name}: {status}", flush=True)


@pytest.fixture(scope="session")
def rng():
    import numpy as np

    return np.random.default_rng(20260810)
