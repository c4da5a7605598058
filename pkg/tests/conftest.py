import functools

import numpy as np
import pytest

from qbd2d.model import LimitedServiceParams, build_limited_service

# (criterion, PASS/FAIL, detail) lines collected by the acceptance suite
ACCEPTANCE_LINES: list[str] = []

SYMMETRIC = (0.3, 0.3, 1.0, 1.0)
ASYMMETRIC = (0.24, 0.7, 1.2, 1.0)


@functools.lru_cache(maxsize=None)
def limited(K: int, rates=SYMMETRIC):
    return build_limited_service(LimitedServiceParams(K, *rates))


@pytest.fixture(scope="session")
def k1():
    return limited(1)


@pytest.fixture(scope="session")
def k3():
    return limited(3)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@functools.lru_cache(maxsize=None)
def analyzed(K: int, rates=SYMMETRIC, eq_tol: float = 1e-8):
    from qbd2d.asymptotics import analyze

    return analyze(limited(K, rates), eq_tol=eq_tol)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
