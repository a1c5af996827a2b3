"""Kernel backend selection.

The compiled extension is preferred when importable; set NLFRAC_PURE_PYTHON=1
to force the numpy fallback (used by the backend-equivalence tests and the
benchmark script).
"""

import os

if os.environ.get("NLFRAC_PURE_PYTHON", "") not in ("", "0"):
    from . import _kernels_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _kernels_cy as _impl

        BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as _impl

        BACKEND = "python"

ml_series = _impl.ml_series
ml_asymptotic = _impl.ml_asymptotic
conv_weight_sum = _impl.conv_weight_sum
l1_ivp = _impl.l1_ivp


def get_backend(name=None):
    """Return the kernel module for `name` ("compiled" or "python").

    With name None returns the active backend module. Raises ImportError if
    the compiled backend is requested but was not built.
    """
    if name is None or name == BACKEND:
        return _impl
    if name == "python":
        from . import _kernels_py

        return _kernels_py
    if name == "compiled":
        from . import _kernels_cy

        return _kernels_cy
    raise ValueError(f"unknown backend {name!r}")
