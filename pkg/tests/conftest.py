import numpy as np
import pytest

from rprsd import _backend

ACCEPTANCE_LINES = []


def _available_backends():
    names = ["python"]
    if _backend.compiled_kernels() is not None:
        names.append("cython")
    return names


@pytest.fixture(params=_available_backends())
def backend(request, monkeypatch):
    """Run the test once per kernel backend."""
    mod = _backend.python_kernels if request.param == "python" else _backend.compiled_kernels()
    monkeypatch.setattr(_backend, "kernels", mod)
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def record_acceptance(number, title, passed, detail=""):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title}"
    if detail:
        line += f" ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
