"""Hot kernels: the banded max-accuracy DP and the exhaustive oracle search.

The compiled extension is used when it imports; otherwise (or when
``FRAMESCHED_PURE_PYTHON=1``) the pure-Python twins are used. Both produce
identical results.
"""

import os

from . import _pykernels as python_backend

if os.environ.get("FRAMESCHED_PURE_PYTHON") == "1":
    compiled_backend = None
else:
    try:
        from . import _ckernels as compiled_backend
    except ImportError:
        compiled_backend = None

_active = compiled_backend or python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

acc_dp = _active.acc_dp
oracle_search = _active.oracle_search

OPT_OFFLOAD = python_backend.OPT_OFFLOAD
OPT_LOCAL = python_backend.OPT_LOCAL
OPT_SKIP = python_backend.OPT_SKIP

__all__ = ["BACKEND", "acc_dp", "oracle_search", "python_backend", "compiled_backend",
           "OPT_OFFLOAD", "OPT_LOCAL", "OPT_SKIP"]
