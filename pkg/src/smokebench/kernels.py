"""Batch kernels, compiled when available.

The Cython extension ``_ckernels`` is preferred; set ``SMOKEBENCH_PURE_PYTHON=1``
to force the numpy fallback. ``BACKEND`` names the active implementation.
"""
import os

from . import _pykernels

BACKENDS = {"numpy": _pykernels}

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None
else:
    BACKENDS["cython"] = _ckernels

if _ckernels is not None and os.environ.get("SMOKEBENCH_PURE_PYTHON", "") in ("", "0"):
    BACKEND = "cython"
else:
    BACKEND = "numpy"

_impl = BACKENDS[BACKEND]
excess_exposure_batch = _impl.excess_exposure_batch
random_hour_excess_batch = _impl.random_hour_excess_batch
squared_error_sums = _impl.squared_error_sums
haversine_batch = _impl.haversine_batch
