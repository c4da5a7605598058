"""Backend selection for the inner loops.

The compiled extension is used when it was built; otherwise, or when the
environment variable ``QBD_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the pure-Python twin is used.  ``BACKEND`` names the choice.
"""

import os

from . import _kernels_py

_force_py = os.environ.get("QBD_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_py:
        raise ImportError("pure-Python backend requested")
    from . import _kernels as _impl

    BACKEND = "compiled"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"

natural_iteration = _impl.natural_iteration
perron_power = _impl.perron_power
gauss_seidel_sweep = _impl.gauss_seidel_sweep

__all__ = ["BACKEND", "natural_iteration", "perron_power", "gauss_seidel_sweep"]
