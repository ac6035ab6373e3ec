"""Hot per-pixel kernels with a numba fast path and a pure numpy fallback.

The backend is chosen once at import time from the RESTEER_NUMBA environment
variable: "1" forces the numba path (ImportError if numba is missing), "0"
forces numpy, anything else (or unset) tries numba and falls back.  Both
backends implement identical clamped-border semantics; benchmarks/bench_kernels.py
times the two against each other.
"""

from __future__ import annotations

import os

_flag = os.environ.get("RESTEER_NUMBA", "auto").strip().lower()

if _flag in ("0", "false", "no", "off"):
    from . import numpy_impl as _impl

    BACKEND = "numpy"
elif _flag in ("1", "true", "yes", "on"):
    from . import numba_impl as _impl

    BACKEND = "numba"
else:
    try:
        from . import numba_impl as _impl

        BACKEND = "numba"
    except ImportError:
        from . import numpy_impl as _impl

        BACKEND = "numpy"

box_mean = _impl.box_mean
local_mean_var = _impl.local_mean_var
local_ssim_map = _impl.local_ssim_map
tv_chambolle = _impl.tv_chambolle
total_variation = _impl.total_variation
nlm_filter = _impl.nlm_filter
conv2d_zero = _impl.conv2d_zero
corr2d_zero = _impl.corr2d_zero


def backend_name() -> str:
    """Active kernel backend, "numba" or "numpy"."""
    return BACKEND
