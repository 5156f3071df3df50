"""Hot-loop kernels with a compiled core and a NumPy fallback.

The Cython extension is preferred when it built successfully; set
``CPR_LDP_PURE_PYTHON=1`` to force the NumPy implementation (used by the
benchmark to compare both).  Both backends implement the same contract and
agree to floating-point round-off.
"""

import os

from . import _pykernels

if os.environ.get("CPR_LDP_PURE_PYTHON"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

em_decode = _impl.em_decode
kde_grid_eval = _impl.kde_grid_eval

__all__ = ["BACKEND", "em_decode", "kde_grid_eval"]
