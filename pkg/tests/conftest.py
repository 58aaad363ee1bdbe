import numpy as np
import pytest

from scrambling import kernels


@pytest.fixture(params=sorted(kernels.available_backends()))
def backend(request):
    return kernels.available_backends()[request.param]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
