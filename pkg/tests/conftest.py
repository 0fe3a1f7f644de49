import numpy as np
import pytest

from freeprob.algebra import Algebra


@pytest.fixture(params=["matrix:1", "matrix:2", "diagonal:3"])
def alg(request):
    return Algebra.from_spec(request.param)


@pytest.fixture
def m2():
    return Algebra.matrix(2)


def assert_close(a, b, tol):
    dev = float(np.abs(np.asarray(a) - np.asarray(b)).max())
    assert dev <= tol, f"deviation {dev:.3e} exceeds {tol:.1e}"
