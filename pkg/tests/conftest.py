import numpy as np
import pytest
from hypothesis import settings

from qcurv.geometry import make_dimension

settings.register_profile("qcurv", deadline=None, max_examples=40, derandomize=True)
settings.load_profile("qcurv")


@pytest.fixture(scope="session")
def dim6():
    return make_dimension(6)


@pytest.fixture(scope="session")
def axis6(dim6):
    from qcurv.spectral import AxisymBackend

    return AxisymBackend(dim6, 160)


def unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
