import numpy as np
import pytest

from fractalstring import _kernels, derive_params
from fractalstring.spectral import find_root_set


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # pay the numba compilation cost once, outside any timed test body
    _kernels.warmup()


@pytest.fixture(scope="session")
def params_half():
    return derive_params(0.5)


@pytest.fixture(scope="session")
def params_third():
    return derive_params(1.0 / 3.0)


@pytest.fixture(scope="session")
def params_two_thirds():
    return derive_params(2.0 / 3.0)


_ROOT_CACHE = {}


@pytest.fixture(scope="session")
def root_set_for():
    """Session-cached root sets keyed by (alpha, window bottom)."""

    def get(params, lo=-600.0):
        key = (params.alpha, lo)
        if key not in _ROOT_CACHE:
            _ROOT_CACHE[key] = find_root_set(params, (lo, -0.5))
        return _ROOT_CACHE[key]

    return get


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
