"""Backend selection for the hot interference kernel.

The compiled extension is used when it was built; otherwise the numpy
fallback is loaded. Set ``EITREVIVAL_PURE_PYTHON=1`` to force the fallback.
"""
import os

import numpy as np

from . import _kernels_py

if os.environ.get("EITREVIVAL_PURE_PYTHON", "") not in ("", "0"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None

if _compiled is not None:
    BACKEND = "cython"

    def interference_factor(theta, coeffs, h0):
        """``|sum_j coeffs[j] exp(1j (h0 + j) theta)|**2`` elementwise."""
        return _compiled.interference_factor(
            np.ascontiguousarray(theta, dtype=np.float64),
            np.ascontiguousarray(coeffs, dtype=np.float64),
            int(h0),
        )

    def interference_sum(theta, coeffs, h0):
        """Complex ``sum_j coeffs[j] exp(1j (h0 + j) theta)`` elementwise."""
        return _compiled.interference_sum(
            np.ascontiguousarray(theta, dtype=np.float64),
            np.ascontiguousarray(coeffs, dtype=np.float64),
            int(h0),
        )
else:
    BACKEND = "python"
    interference_factor = _kernels_py.interference_factor
    interference_sum = _kernels_py.interference_sum

BACKENDS = {"python": _kernels_py.interference_factor}
SUM_BACKENDS = {"python": _kernels_py.interference_sum}
if _compiled is not None:
    BACKENDS["cython"] = interference_factor
    SUM_BACKENDS["cython"] = interference_sum
