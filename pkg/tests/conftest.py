import numpy as np
import pytest

from graf import complex_core


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)


@pytest.fixture(params=["numpy", "radix2"])
def fft_backend(request):
    previous = complex_core.get_backend()
    complex_core.set_backend(request.param)
    yield request.param
    complex_core.set_backend(previous)


def crandn(rng, *shape):
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record one acceptance line; the terminal summary prints them all."""

    def record(label, ok, detail):
        ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
