import math
import sys

import numpy as np
import pytest

import lntail as lt


@pytest.fixture(scope="session")
def bench():
    return lt.validate_problem(lt.BENCH_MU, lt.BENCH_SIGMA)


@pytest.fixture(scope="session")
def bench_report(bench):
    return lt.check_assumption_a(bench)


@pytest.fixture
def plan_at(bench, bench_report):
    def make(log_gamma):
        return lt.mean_shift_dominant(bench, bench_report, math.exp(log_gamma))
    return make


def random_spd(rng, n, jitter=0.1):
    a = rng.standard_normal((n, n + 2))
    return a @ a.T / (n + 2) + jitter * np.eye(n)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
