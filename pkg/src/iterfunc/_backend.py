"""Select the kernel implementation at import time.

The compiled extension is used when it is importable. Setting the
environment variable ``ITERFUNC_PURE_PYTHON`` to a non-empty value forces
the numpy fallback.
"""
import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def get_backend(name=None):
    """Return the kernel module called ``name`` ("cython" or "python").

    With ``name=None`` the default selection applies.
    """
    if name is None:
        name = "python" if os.environ.get("ITERFUNC_PURE_PYTHON") or _compiled is None else "cython"
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    if name == "python":
        return _kernels_py
    raise ValueError(f"unknown backend {name!r}")


def backend_name(module):
    return "cython" if module is _compiled and module is not None else "python"


DEFAULT = get_backend()
