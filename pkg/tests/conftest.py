import numpy as np
import pytest

from chromadiff import build_linear_schedule


def rel_dev(a, b):
    """Max-norm deviation of a from b, relative to b's magnitude."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = float(np.max(np.abs(b)))
    if scale == 0.0:
        return float(np.max(np.abs(a - b)))
    return float(np.max(np.abs(a - b)) / scale)


@pytest.fixture(scope="session")
def sched1000():
    return build_linear_schedule(1000)


@pytest.fixture(scope="session")
def sched300():
    return build_linear_schedule(300)
