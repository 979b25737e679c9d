import math

import numpy as np
import pytest

from dfig_reshape.params import default_control, default_machine, grid_from_scr, solve_operating_point
from dfig_reshape.reshape import ReshapeConfig

W_RATED = 2 * math.pi * 55.0


@pytest.fixture
def machine():
    return default_machine()


@pytest.fixture
def control():
    return default_control(Kp_pll=2.57)


@pytest.fixture
def grid2():
    return grid_from_scr(2.0)


@pytest.fixture
def rated_op(machine, grid2):
    return solve_operating_point(machine, grid2, -1.0, 0.0, W_RATED)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def resolved(mode, op, **kw):
    return ReshapeConfig(mode, **kw).resolved(op)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted({r[0] for r in results}):
        rows = [r for r in results if r[0] == n]
        passed = sum(ok for _, ok, _ in rows)
        verdict = "PASS" if passed == len(rows) else "FAIL"
        terminalreporter.write_line(f"[{verdict}] criterion {n:2d} ({passed}/{len(rows)} checks)")
        for _, ok, detail in rows:
            terminalreporter.write_line(f"        {'ok  ' if ok else 'FAIL'} {detail}")
