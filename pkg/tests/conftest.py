import numpy as np
import pytest

from qrsr.qr_core import CodeConfig, encode, rasterize

PAYLOAD = "Thanks reviewer!"

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def verdict(request):
    """Record and print one pass/fail line for an acceptance criterion."""

    def record(number: int, passed: bool, detail: str) -> None:
        line = f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(line)
        request.config.stash[_ACCEPTANCE_KEY].append(line)

    return record


@pytest.fixture(scope="session")
def cfg():
    return CodeConfig()


@pytest.fixture(scope="session")
def symbol(cfg):
    return encode(PAYLOAD, cfg)


@pytest.fixture(scope="session")
def clean(symbol, cfg):
    return rasterize(symbol, cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
