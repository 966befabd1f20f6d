import os

import numpy as np
import pytest

# hypothesis is optional at import time so plain unit tests still run
try:
    from hypothesis import settings

    settings.register_profile("ci", max_examples=60, deadline=None)
    settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))
except ImportError:  # pragma: no cover
    pass

ACCEPTANCE = {}


@pytest.fixture
def acceptance(request):
    """Record one acceptance criterion: ``acceptance(number, title, ok, detail)``."""

    def record(number, title, ok, detail=""):
        ACCEPTANCE[number] = (title, bool(ok), detail)
        status = "PASS" if ok else "FAIL"
        # also visible with -s; the terminal summary repeats it regardless
        print(f"[{status}] criterion {number}: {title} {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {number}. {title}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
