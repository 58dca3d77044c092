import numpy as np
import pytest

from fidest.design import EstimatorDesign, target_fingerprint
from fidest.operators import projector
from fidest.povm import MeasurementFamily
from fidest.simulate import haar_random_target, make_rng


@pytest.fixture
def rng():
    return make_rng(12345)


@pytest.fixture
def basis0():
    return projector([1.0, 0.0])


@pytest.fixture
def z_family():
    return MeasurementFamily(1, ["Z"])


@pytest.fixture
def zbasis_design(basis0):
    return EstimatorDesign(
        n=1, settings=("Z",), q=[1.0], alpha=[[1.0, 0.0]], method="manual", target_hash=target_fingerprint(basis0)
    )


def haar_projector(n, seed):
    return projector(haar_random_target(n, seed))


def pytest_configure(config):
    np.set_printoptions(precision=12)


ACCEPTANCE_LINES = []


def record_criterion(label, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


@pytest.fixture
def criterion():
    return record_criterion


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
