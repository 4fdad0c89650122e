import numpy as np
import pytest

from qtb import kernels

ACCEPTANCE_LINES = []


def record(label, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] {label}" + (f"  ({detail})" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


BACKENDS = [kernels.numpy_backend]
if kernels.numba_backend is not None:
    BACKENDS.append(kernels.numba_backend)


@pytest.fixture(params=BACKENDS, ids=lambda b: b.__name__.rsplit("_", 1)[-1])
def backend(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
