"""Import-time selection of the series kernels: compiled extension if built, numpy otherwise.

Set FUNDSOL_PURE_PYTHON=1 to force the numpy path.
"""
import os

from . import _kernels_py

BACKEND = "python"
eval_series_2d = _kernels_py.eval_series_2d

if not os.environ.get("FUNDSOL_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        eval_series_2d = _compiled.eval_series_2d
        BACKEND = "cython"
