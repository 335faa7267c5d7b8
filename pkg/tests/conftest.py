import math

import numpy as np
import pytest

from sipkit import _backend


def midpoint(f, a, b, n=10**6):
    """Brute-force midpoint rule, used as an independent quadrature oracle."""
    h = (b - a) / n
    x = a + (np.arange(n) + 0.5) * h
    return float(np.sum(f(x)) * h)


def arc_oracle(x_L, a=None, b=None, n=10**6):
    q = 0.5 * x_L * x_L
    a = q if a is None else a
    b = 1.0 if b is None else b
    return midpoint(lambda z: np.sqrt(1.0 + q * q / z ** 4), a, b, n)


def neg_log_bin_average(edges):
    """Exact cell averages of ``-log q`` (antiderivative ``q - q log q``)."""
    e = np.asarray(edges, dtype=float)
    F = e - e * np.log(np.where(e > 0, e, 1.0))
    return np.diff(F) / np.diff(e)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=["compiled", "python"])
def kernels(request, monkeypatch):
    """Run a test against both kernel backends."""
    if request.param == "compiled":
        if _backend.NAME != "cython":
            pytest.skip("compiled kernels not built")
        return _backend.kernels
    monkeypatch.setattr(_backend, "kernels", _backend.PURE)
    return _backend.PURE


SQRT2 = math.sqrt(2.0)


_ACCEPTANCE = {}


@pytest.fixture
def criterion():
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
