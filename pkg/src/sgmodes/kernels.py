"""Hot-loop backend selection.

The compiled extension :mod:`sgmodes._kernels` is used when it was built;
otherwise, or when ``SGMODES_PURE_PYTHON=1`` is set, the pure-Python twin in
:mod:`sgmodes._kernels_py` is loaded. Both expose the same functions.
"""
import os

from . import _kernels_py

if os.environ.get("SGMODES_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

j_logderiv = _impl.j_logderiv
j_logderiv_array = _impl.j_logderiv_array
branch_function = _impl.branch_function

python = _kernels_py

__all__ = ["BACKEND", "j_logderiv", "j_logderiv_array", "branch_function", "python"]
