import numpy as np
import pytest

from stratnorm.strategies import InteractionShape

_CRITERIA: dict[int, tuple[bool, str]] = {}


class _Criterion:
    """Context manager that records one acceptance line for the terminal summary."""

    def __init__(self, number: int, description: str):
        self.number = number
        self.description = description
        self.detail = ""

    def note(self, detail: str):
        self.detail = detail

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        ok = exc_type is None
        detail = self.detail if ok else f"{exc_type.__name__}: {exc}".splitlines()[0]
        _CRITERIA[self.number] = (ok, f"{self.description}; {detail}" if detail
                                  else self.description)
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        ok, text = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {text}")


@pytest.fixture
def state_shape():
    return InteractionShape((2,), (1,))


@pytest.fixture
def qubit_shape():
    return InteractionShape((2,), (2,))


@pytest.fixture
def two_round_shape():
    return InteractionShape.uniform(2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
