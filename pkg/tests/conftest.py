import pytest

from cc_ik import _kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile (or reload from disk cache) before anything is timed
    _kernels.warmup()
