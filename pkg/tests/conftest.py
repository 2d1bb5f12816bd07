import math

import numpy as np
import pytest

from geofne.model_spaces import EuclideanSpace, HyperboloidSpace, LinfSpace, tripod


@pytest.fixture
def euclid():
    return EuclideanSpace(2)


@pytest.fixture
def hyp():
    return HyperboloidSpace(2)


@pytest.fixture
def tree():
    return tripod()


@pytest.fixture
def linf():
    return LinfSpace(2)


def cat0_spaces():
    return [EuclideanSpace(2), HyperboloidSpace(2), tripod()]


@pytest.fixture(params=["euclidean", "hyperboloid", "tree"])
def cat0(request):
    return {"euclidean": EuclideanSpace(2), "hyperboloid": HyperboloidSpace(2), "tree": tripod()}[request.param]


def hyp_point(r, theta=0.0):
    """Point of H^2 at distance ``r`` from the origin in direction ``theta``."""
    return np.array([math.cosh(r), math.sinh(r) * math.cos(theta), math.sinh(r) * math.sin(theta)])


ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    """Log one acceptance line; call before asserting so failures are reported too."""
    def _record(criterion, ok, detail=""):
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}".rstrip()
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
