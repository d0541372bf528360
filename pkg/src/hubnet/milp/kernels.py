"""Selects the simplex pivot kernel backend at import time.

The compiled extension is preferred; the numpy implementation is the
fallback. Set HUBNET_PURE_PYTHON=1 to force the fallback (used by the
benchmark and by the backend-equivalence tests).
"""

from __future__ import annotations

import os

if os.environ.get("HUBNET_PURE_PYTHON"):
    from hubnet.milp import _kernels_py as _impl
else:
    try:
        from hubnet.milp import _kernels_c as _impl  # type: ignore
    except ImportError:
        from hubnet.milp import _kernels_py as _impl

BACKEND = _impl.BACKEND
pivot_update = _impl.pivot_update
ratio_test = _impl.ratio_test
dual_ratio_test = _impl.dual_ratio_test
