"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when
``CAUSALFAIR_PURE_PYTHON=1`` is set, the numpy fallback takes over. Both
expose the same functions.
"""

import os

from causalfair import _kernels_py

if os.environ.get("CAUSALFAIR_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from causalfair import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

reachable = _impl.reachable
knn_coverage = _impl.knn_coverage
disc_logits = _impl.disc_logits
disc_grads = _impl.disc_grads
gen_forward = _impl.gen_forward
gen_grads = _impl.gen_grads
adam_update = _impl.adam_update

__all__ = [
    "BACKEND",
    "reachable",
    "knn_coverage",
    "disc_logits",
    "disc_grads",
    "gen_forward",
    "gen_grads",
    "adam_update",
]
