"""Backend selection for the hot kernels.

The compiled extension is preferred; set ``PACKLP_PURE_PYTHON=1`` to force the
pure-Python twin.  ``BACKEND`` names the active implementation.
"""
import os

from packlp import _kernels_py

_impl = _kernels_py
BACKEND = "python"
if os.environ.get("PACKLP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from packlp import _kernels as _compiled
    except ImportError:
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "cython"

hyp2f1_series = _impl.hyp2f1_series
hyp2f1_negative = _impl.hyp2f1_negative
gegenbauer_table = _impl.gegenbauer_table
laguerre_table = _impl.laguerre_table
enumerate_lattice = _impl.enumerate_lattice


def backends():
    """Return the available kernel modules keyed by backend name."""
    found = {"python": _kernels_py}
    try:
        from packlp import _kernels
    except ImportError:
        return found
    found["cython"] = _kernels
    return found
