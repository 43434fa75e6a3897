import importlib

import pytest

from sspm import _pykernels


def _compiled():
    try:
        return importlib.import_module("sspm._ckernels")
    except ImportError:
        return None


COMPILED = _compiled()


@pytest.fixture(params=["python", "cython"])
def kernel_module(request):
    """Each kernel implementation in turn; the compiled one is skipped if absent."""
    if request.param == "python":
        return _pykernels
    if COMPILED is None:
        pytest.skip("compiled kernels not built")
    return COMPILED
