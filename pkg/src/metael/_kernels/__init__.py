"""Kernel backend selection: compiled extension when available, NumPy otherwise.

Set METAEL_PURE_PYTHON=1 to force the NumPy backend; this is what the
benchmark script and the cross-backend equivalence tests rely on.
"""

from __future__ import annotations

import os

if os.environ.get("METAEL_PURE_PYTHON", "") not in ("", "0"):
    from metael._kernels import _forest_py as _impl

    BACKEND = "python"
else:
    try:
        from metael._kernels import _forest_cy as _impl  # type: ignore

        BACKEND = "cython"
    except ImportError:
        from metael._kernels import _forest_py as _impl

        BACKEND = "python"

train_forest = _impl.train_forest
predict_forest = _impl.predict_forest

__all__ = ["BACKEND", "train_forest", "predict_forest"]
