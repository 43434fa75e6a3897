"""Backend selection for the counter tables.

The compiled extension is used when it imports; otherwise the pure-Python
mirror is used. Set ``SSPM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

if os.environ.get("SSPM_PURE_PYTHON"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        _impl = _pykernels

CounterTable = _impl.CounterTable
DualCountTable = _impl.DualCountTable
BACKEND = "cython" if _impl is not _pykernels else "python"

splitmix64 = _pykernels.splitmix64

__all__ = ["BACKEND", "CounterTable", "DualCountTable", "splitmix64"]
