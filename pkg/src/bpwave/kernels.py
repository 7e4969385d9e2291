"""Backend selection for the hot loops.

The Cython extension is used when it was built; otherwise (or when the
environment variable ``BPWAVE_PURE_PYTHON`` is set to a non-empty value
other than ``0``) the pure-Python implementations are used.
"""

import os

from . import _kernels_py

if os.environ.get("BPWAVE_PURE_PYTHON", "0") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

cyclic_tridiag_solve = _impl.cyclic_tridiag_solve
periodic_cubic_interp = _impl.periodic_cubic_interp

__all__ = ["BACKEND", "cyclic_tridiag_solve", "periodic_cubic_interp"]
