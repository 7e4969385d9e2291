import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("bpwave", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("bpwave")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = {}


@pytest.fixture
def criterion(request, capsys):
    """Record one PASS/FAIL line for a numbered acceptance criterion.

    Lines are printed as they happen and again, in order, in the terminal summary.
    """
    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.stash[_ACCEPTANCE][(number, request.node.name)] = line
        with capsys.disabled():
            print(f"\n{line}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for key in sorted(lines):
            terminalreporter.write_line(lines[key])
