import numpy as np
import pytest

from fraciga.assembly import DiscretizationParams
from fraciga.nurbs import refine_dyadic, square, unit_disk


@pytest.fixture(scope="session")
def disk():
    return unit_disk()


@pytest.fixture(scope="session")
def disk_l2():
    return refine_dyadic(unit_disk(), 2)


@pytest.fixture(scope="session")
def sq():
    return square(1.0)


@pytest.fixture(scope="session")
def fast_params():
    """Reduced quadrature for tests that only need structure, not accuracy."""
    return DiscretizationParams(s=0.5, n=200, m=8)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Record one ``PASS``/``FAIL`` line per acceptance check."""
    lines = request.config.stash.setdefault(ACCEPTANCE_LINES, [])

    def log(tag, ok, detail):
        line = f"{tag:<6} {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
